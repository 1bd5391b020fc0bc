//! Reference calibrations bundled as TOML data.

const PRESETS: &[(&str, &str)] = &[
    ("flip-a", include_str!("../presets/flip-a.toml")),
    ("flip-b", include_str!("../presets/flip-b.toml")),
    ("basins", include_str!("../presets/basins.toml")),
    ("stochastic", include_str!("../presets/stochastic.toml")),
    ("deterministic", include_str!("../presets/deterministic.toml")),
    ("flip2-a", include_str!("../presets/flip2-a.toml")),
    ("flip2-b", include_str!("../presets/flip2-b.toml")),
    ("basins2", include_str!("../presets/basins2.toml")),
    ("stochastic2", include_str!("../presets/stochastic2.toml")),
    ("deterministic2", include_str!("../presets/deterministic2.toml")),
    ("bifurcations", include_str!("../presets/bifurcations.toml")),
    ("bifurcations2", include_str!("../presets/bifurcations2.toml")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
