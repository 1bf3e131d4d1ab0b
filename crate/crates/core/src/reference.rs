//! Published coherence values used as regression targets.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PublishedCoherence {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Smoothed trust-region result as published.
    pub trstmi: f64,
    /// Alternating-projection result, when published.
    pub altproj: Option<f64>,
    /// Best value from the online packing database, when published.
    pub database: Option<f64>,
}

const fn entry(d: usize, n: usize, trstmi: f64, altproj: Option<f64>, database: Option<f64>) -> PublishedCoherence {
    PublishedCoherence {
        d,
        n,
        trstmi,
        altproj,
        database,
    }
}

pub const PUBLISHED: &[PublishedCoherence] = &[
    entry(2, 4, 0.5774, Some(0.5774), None),
    entry(3, 9, 0.5001, Some(0.5001), None),
    entry(4, 16, 0.4473, Some(0.4473), None),
    entry(5, 25, 0.4083, Some(0.4510), None),
    entry(6, 36, 0.3778, Some(0.4460), None),
    entry(7, 49, 0.3834, Some(0.4502), None),
    entry(3, 27, 0.734233, None, Some(0.73726116)),
    entry(3, 28, 0.737797, None, Some(0.73884638)),
    entry(6, 24, 0.371529, None, Some(0.37267800)),
];

pub fn published(d: usize, n: usize) -> Option<PublishedCoherence> {
    PUBLISHED.iter().copied().find(|p| p.d == d && p.n == n)
}

/// Sizes for which an optimal configuration has a single off-diagonal
/// magnitude, as observed numerically: `(d, largest N)` with the range
/// starting at `N = d`.
pub const ONE_DISTANCE_RANGES: &[(usize, usize)] = &[(2, 3), (3, 4), (4, 8), (5, 13), (6, 16), (7, 19), (8, 22)];

pub fn one_distance_expected(d: usize, n: usize) -> Option<bool> {
    ONE_DISTANCE_RANGES
        .iter()
        .find(|(dd, _)| *dd == d)
        .map(|&(_, top)| n >= d && n <= top)
}
