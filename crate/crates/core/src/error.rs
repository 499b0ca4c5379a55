//! Shared error type for the numeric model functions.

/// A scalar argument fell outside the domain a model function is defined on.
///
/// Carries the offending value so callers can report exactly what was
/// rejected without re-deriving it from context.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{name} = {value} is outside its valid domain ({requirement})")]
pub struct DomainError {
    /// Name of the rejected argument as it appears in the function signature.
    pub name: &'static str,
    /// The rejected value.
    pub value: f64,
    /// Human-readable statement of the accepted domain.
    pub requirement: &'static str,
}

impl DomainError {
    pub fn new(name: &'static str, value: f64, requirement: &'static str) -> Self {
        Self {
            name,
            value,
            requirement,
        }
    }
}

/// Returns `Ok(())` when `ok` holds, otherwise a [`DomainError`] describing
/// the violated requirement.
pub(crate) fn ensure(
    ok: bool,
    name: &'static str,
    value: f64,
    requirement: &'static str,
) -> Result<(), DomainError> {
    if ok {
        Ok(())
    } else {
        Err(DomainError::new(name, value, requirement))
    }
}
