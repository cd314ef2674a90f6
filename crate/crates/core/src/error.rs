use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid dimensions must be positive (got {height}x{width})")]
    ZeroDim { height: usize, width: usize },
    #[error("grid holds {got} values but {height}x{width} needs {}", height * width)]
    LengthMismatch { height: usize, width: usize, got: usize },
    #[error("grid value at index {index} is negative or not finite ({value})")]
    InvalidValue { index: usize, value: f64 },
    #[error("grid dimensions differ: {left:?} vs {right:?}")]
    DimMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("empty input list")]
    EmptyList,
    #[error("grid has zero total mass")]
    ZeroMass,
    #[error("grid is not a probability distribution (pixel sum {sum})")]
    NotNormalized { sum: f64 },
    #[error("grid has zero variance, correlation is undefined")]
    ZeroVariance,
    #[error("p is positive where q is zero at index {index}")]
    UndefinedRatio { index: usize },
    #[error("category id {0} has no super-category mapping and no catch-all")]
    UnmappedCategory(u32),
    #[error("category id {id} is outside the {n_classes} tensor classes")]
    CategoryOutOfRange { id: u32, n_classes: usize },
    #[error("mapping refers to detailed channel {channel} but the tensor has {n_channels}")]
    ChannelMismatch { channel: usize, n_channels: usize },
    #[error("{got} super categories exceed the channel cap of {cap}")]
    TooManySuperCategories { got: usize, cap: usize },
    #[error("super-category index {index} out of range for {n_super} super categories")]
    SuperIndexOutOfRange { index: usize, n_super: usize },
    #[error("preference vector has {got} weights, mapping needs at least {needed}")]
    PreferenceLength { got: usize, needed: usize },
    #[error("rating {0} is outside 0..=10")]
    RatingOutOfRange(u32),
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("names and weights differ in length ({names} vs {weights})")]
    NamesWeightsMismatch { names: usize, weights: usize },
    #[error("weights must be nonnegative and sum to 1 (sum {sum})")]
    InvalidWeights { sum: f64 },
    #[error("label count {labels} does not match dataset size {images}")]
    LabelCount { labels: usize, images: usize },
}
