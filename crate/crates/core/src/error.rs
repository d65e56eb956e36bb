use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("vertex id {vertex} out of range for {n_vertices} vertices")]
    VertexOutOfRange { vertex: u64, n_vertices: usize },
    #[error("template is not a tree: {0}")]
    NotATree(String),
    #[error("instance too large for exhaustive counting: {0}")]
    SizeGuard(String),
    #[error("{field} = {value} does not fit in {bits} bits")]
    FieldRange {
        field: &'static str,
        value: u64,
        bits: u32,
    },
    #[error("malformed encoded rows: {0}")]
    Codec(String),
    #[error("no row for vertex {vertex} in the received buffer")]
    MissingRow { vertex: u64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
