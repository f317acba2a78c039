//! Byte-level fallback tokenizer so the pipeline runs without a model
//! vocabulary: ids 0..=255 are UTF-8 bytes, then two specials.

use super::EvalError;

pub const EOD: u32 = 256;
pub const EOS: u32 = 257;
pub const VOCAB_SIZE: u32 = 258;

pub fn byte_fallback_tokenize(text: &str) -> Vec<u32> {
    text.bytes().map(u32::from).collect()
}

/// Inverse of [`byte_fallback_tokenize`]; specials and out-of-range ids
/// are rejected.
pub fn byte_fallback_decode(ids: &[u32]) -> Result<String, EvalError> {
    let bytes = ids
        .iter()
        .map(|&id| u8::try_from(id).map_err(|_| EvalError::NotAByte(id)))
        .collect::<Result<Vec<u8>, _>>()?;
    String::from_utf8(bytes).map_err(|_| EvalError::InvalidUtf8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_ascii() {
        assert!(byte_fallback_tokenize("").is_empty());
        assert_eq!(byte_fallback_tokenize("ab"), vec![97, 98]);
        assert_eq!(byte_fallback_decode(&[97, 98]).unwrap(), "ab");
    }

    #[test]
    fn multibyte_round_trip() {
        let s = "Võro kiil, коми кыв";
        assert_eq!(byte_fallback_decode(&byte_fallback_tokenize(s)).unwrap(), s);
    }

    #[test]
    fn specials_do_not_decode() {
        assert!(matches!(
            byte_fallback_decode(&[EOD]),
            Err(EvalError::NotAByte(256))
        ));
        assert!(byte_fallback_decode(&[0xC3]).is_err());
    }
}
