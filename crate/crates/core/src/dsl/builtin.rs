//! Shipped circuit files.

/// Two splitters, per-arm phases, removable output splitter.
pub const MZI_CLOSED: &str = include_str!("../../circuits/mzi_closed.circ");
/// Same interferometer without arm phases, output splitter meant to be switched off.
pub const MZI_OPEN: &str = include_str!("../../circuits/mzi_open.circ");
/// A single balanced splitter.
pub const BARE_BS: &str = include_str!("../../circuits/bare_bs.circ");

/// Look up a shipped circuit by file name.
pub fn lookup(file_name: &str) -> Option<&'static str> {
    match file_name {
        "mzi_closed.circ" => Some(MZI_CLOSED),
        "mzi_open.circ" => Some(MZI_OPEN),
        "bare_bs.circ" => Some(BARE_BS),
        _ => None,
    }
}
