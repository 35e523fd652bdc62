use std::fmt;

/// A path cost in timesteps, or infinity for forbidden / unreachable pairs.
///
/// Arithmetic saturates at [`Cost::INF`].
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cost(u32);

impl Cost {
    pub const INF: Cost = Cost(u32::MAX);
    pub const ZERO: Cost = Cost(0);

    /// A finite cost. Panics on the sentinel value.
    pub fn new(value: u32) -> Self {
        assert!(value != u32::MAX, "u32::MAX is reserved for infinity");
        Cost(value)
    }

    pub fn is_finite(self) -> bool {
        self.0 != u32::MAX
    }

    pub fn get(self) -> Option<u32> {
        self.is_finite().then_some(self.0)
    }

    pub fn saturating_add(self, other: Cost) -> Cost {
        if self.is_finite() && other.is_finite() {
            Cost(self.0.saturating_add(other.0))
        } else {
            Cost::INF
        }
    }
}

impl From<u32> for Cost {
    fn from(value: u32) -> Self {
        Cost(value)
    }
}

impl From<Option<u32>> for Cost {
    fn from(value: Option<u32>) -> Self {
        value.map_or(Cost::INF, Cost)
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.get() {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("inf"),
        }
    }
}
