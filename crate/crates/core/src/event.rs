//! Hereditary graph events and their thresholds.

use std::fmt;

/// The monitored graph statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    EdgeCount,
    MaxDegree,
    MaxComponent,
    MaxClique,
    TriangleCount,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [
        EventKind::EdgeCount,
        EventKind::MaxDegree,
        EventKind::MaxComponent,
        EventKind::MaxClique,
        EventKind::TriangleCount,
    ];
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EventKind::EdgeCount => "edge_count",
            EventKind::MaxDegree => "max_degree",
            EventKind::MaxComponent => "max_component",
            EventKind::MaxClique => "max_clique",
            EventKind::TriangleCount => "triangle_count",
        };
        f.write_str(name)
    }
}

/// A hereditary event `A` with threshold `ell`:
/// edge count <= ell, max degree <= ell, largest component size <= ell + 1,
/// max clique size <= ell + 1, or triangle count <= ell. Removing points
/// never leaves `A`, so the configuration indicator is monotone in the
/// insertion order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventSpec {
    pub kind: EventKind,
    pub ell: u64,
}

impl EventSpec {
    pub fn new(kind: EventKind, ell: u64) -> Self {
        Self { kind, ell }
    }

    /// Whether a configuration with the given statistic value lies in `A`.
    #[inline]
    pub fn admits(&self, statistic: u64) -> bool {
        match self.kind {
            EventKind::EdgeCount | EventKind::TriangleCount | EventKind::MaxDegree => {
                statistic <= self.ell
            }
            EventKind::MaxComponent | EventKind::MaxClique => {
                statistic <= self.ell.saturating_add(1)
            }
        }
    }
}

impl fmt::Display for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<=l, l={}", self.kind, self.ell)
    }
}
