//! Bundled example circuits with their matching pairs and testbenches.

#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    pub template: &'static str,
    pub pairs: &'static str,
    pub testbench: &'static str,
}

pub const FIVE_T_OTA: Fixture = Fixture {
    name: "five_transistor_ota",
    template: include_str!("../fixtures/five_transistor_ota.sp"),
    pairs: include_str!("../fixtures/five_transistor_ota.pairs"),
    testbench: include_str!("../fixtures/five_transistor_ota.tb"),
};

pub const COMMON_SOURCE: Fixture = Fixture {
    name: "common_source",
    template: include_str!("../fixtures/common_source.sp"),
    pairs: include_str!("../fixtures/common_source.pairs"),
    testbench: include_str!("../fixtures/common_source.tb"),
};

pub const RC_LOWPASS: Fixture = Fixture {
    name: "rc_lowpass",
    template: include_str!("../fixtures/rc_lowpass.sp"),
    pairs: include_str!("../fixtures/rc_lowpass.pairs"),
    testbench: include_str!("../fixtures/rc_lowpass.tb"),
};

pub const ALL: [Fixture; 3] = [FIVE_T_OTA, COMMON_SOURCE, RC_LOWPASS];

pub fn by_name(name: &str) -> Option<Fixture> {
    ALL.into_iter().find(|f| f.name == name)
}
