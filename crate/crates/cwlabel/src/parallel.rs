/// Execution strategy for the data-parallel entry points.
///
/// With the `parallel` feature enabled the default is [`Parallelism::Rayon`];
/// without it the enum collapses to the sequential variant and every entry
/// point runs single-threaded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Parallelism {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Rayon,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self == Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }
}
