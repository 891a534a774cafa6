//! Bundled reference scenarios: every representative required-symbols case
//! plus the equal-power headline configuration. Embedded in the binary so
//! batch runs work without locating the source tree.

pub struct ReferenceCase {
    pub case_id: &'static str,
    pub json: &'static str,
    /// Published approximate required-symbol count this case corresponds to
    /// (informational; the batch output reports what the simulation finds).
    pub published_n_b: Option<usize>,
}

macro_rules! case {
    ($id:literal, $published:expr) => {
        ReferenceCase {
            case_id: $id,
            json: include_str!(concat!("../reference/", $id, ".json")),
            published_n_b: $published,
        }
    };
}

/// The twelve representative required-symbols cases.
pub const TABLE_CASES: [ReferenceCase; 12] = [
    case!("t3_01_37_37_40_awgn_125", Some(205)),
    case!("t3_02_37_37_40_awgn_250", Some(200)),
    case!("t3_03_37_37_40_awgn_500", Some(200)),
    case!("t3_04_37_40_40_awgn_125", Some(100)),
    case!("t3_05_37_40_40_awgn_250", Some(70)),
    case!("t3_06_40_40_40_awgn_125", Some(105)),
    case!("t3_07_40_40_40_awgn_250", Some(110)),
    case!("t3_08_40_40_43_awgn_125", Some(210)),
    case!("t3_09_40_40_43_awgn_250", Some(670)),
    case!("t3_10_40_43_45_awgn_125", Some(190)),
    case!("t3_11_40_43_45_lms_125", Some(190)),
    case!("t3_12_40_40_45_awgn_125", Some(380)),
];

/// Equal-power AWGN headline scenario (250 us windows, N_b = 110).
pub const EQUAL_POWER: ReferenceCase = ReferenceCase {
    case_id: "equal_power_awgn_250us",
    json: include_str!("../reference/equal_power_awgn_250us.json"),
    published_n_b: None,
};

pub fn find(case_id: &str) -> Option<&'static ReferenceCase> {
    TABLE_CASES
        .iter()
        .find(|c| c.case_id == case_id)
        .or(if EQUAL_POWER.case_id == case_id {
            Some(&EQUAL_POWER)
        } else {
            None
        })
}
