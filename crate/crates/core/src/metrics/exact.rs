use super::{check_aligned, MetricsError};
use crate::translator::canonicalize_snippet;

/// Byte equality after canonical post-processing.
pub fn exact_match(prediction: &str, reference: &str) -> bool {
    canonicalize_snippet(prediction) == canonicalize_snippet(reference)
}

/// Percentage of aligned pairs that match exactly.
pub fn exact_match_accuracy<S: AsRef<str>, T: AsRef<str>>(predictions: &[S], references: &[T]) -> Result<f64, MetricsError> {
    check_aligned(predictions.len(), references.len())?;
    let hits = predictions
        .iter()
        .zip(references)
        .filter(|(p, r)| exact_match(p.as_ref(), r.as_ref()))
        .count();
    Ok(100.0 * hits as f64 / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_differences_are_penalized() {
        assert!(!exact_match("int 0x80h", "int 0x80"));
        assert!(!exact_match(
            "push long 0x68732f2f\\npush long 0x6e69622f\\nmov ebx, esp",
            "push 0x68732f2f\\npush 0x6e69622f\\nmov ebx, esp"
        ));
        assert!(exact_match("xor  ecx,ecx \\n mul ecx", "xor ecx, ecx\nmul ecx"));
    }

    #[test]
    fn accuracy() {
        let refs = ["int 0x80", "cld"];
        assert_eq!(exact_match_accuracy(&refs, &refs).unwrap(), 100.0);
        assert_eq!(exact_match_accuracy(&["int 0x80h", "cld"], &refs).unwrap(), 50.0);
    }
}
