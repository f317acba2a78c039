use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::SamplerError;

/// Concatenate-and-chunk packing as a streaming iterator.
///
/// Documents are joined with a single end-of-document token between them and
/// the flat stream is cut into consecutive `context_length` blocks; only the
/// final block can be shorter.
pub struct PackIter<I> {
    docs: I,
    context_length: usize,
    eod: u32,
    buf: Vec<u32>,
    started: bool,
    done: bool,
}

impl<I, D> PackIter<I>
where
    I: Iterator<Item = D>,
    D: AsRef<[u32]>,
{
    pub fn new(docs: I, context_length: usize, eod: u32) -> Result<Self, SamplerError> {
        if context_length < 2 {
            return Err(SamplerError::ContextTooShort(context_length));
        }
        Ok(Self {
            docs,
            context_length,
            eod,
            buf: Vec::with_capacity(context_length),
            started: false,
            done: false,
        })
    }
}

impl<I, D> Iterator for PackIter<I>
where
    I: Iterator<Item = D>,
    D: AsRef<[u32]>,
{
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        while self.buf.len() < self.context_length && !self.done {
            match self.docs.next() {
                Some(doc) => {
                    if self.started {
                        self.buf.push(self.eod);
                    }
                    self.started = true;
                    self.buf.extend_from_slice(doc.as_ref());
                }
                None => self.done = true,
            }
        }
        if self.buf.is_empty() {
            return None;
        }
        if self.buf.len() >= self.context_length {
            let rest = self.buf.split_off(self.context_length);
            Some(std::mem::replace(&mut self.buf, rest))
        } else {
            Some(std::mem::take(&mut self.buf))
        }
    }
}

/// Collects [`PackIter`] into a vector.
pub fn pack<D: AsRef<[u32]>>(
    docs: impl IntoIterator<Item = D>,
    context_length: usize,
    eod: u32,
) -> Result<Vec<Vec<u32>>, SamplerError> {
    Ok(PackIter::new(docs.into_iter(), context_length, eod)?.collect())
}

pub fn write_packed_jsonl(path: impl AsRef<Path>, seqs: &[Vec<u32>]) -> Result<(), SamplerError> {
    crate::jsonl::write(path, seqs)
        .map_err(|e| SamplerError::Io(std::io::Error::other(e.to_string())))
}

fn index_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".idx");
    PathBuf::from(p)
}

/// Flat little-endian `u32` tokens, plus `<path>.idx` holding `n + 1`
/// little-endian `u64` token offsets.
pub fn write_packed_binary(path: impl AsRef<Path>, seqs: &[Vec<u32>]) -> Result<(), SamplerError> {
    let path = path.as_ref();
    let mut data = BufWriter::new(fs::File::create(path)?);
    let mut index = BufWriter::new(fs::File::create(index_path(path))?);
    let mut offset = 0u64;
    index.write_all(&offset.to_le_bytes())?;
    for seq in seqs {
        for t in seq {
            data.write_all(&t.to_le_bytes())?;
        }
        offset += seq.len() as u64;
        index.write_all(&offset.to_le_bytes())?;
    }
    data.flush()?;
    index.flush()?;
    Ok(())
}

pub fn read_packed_binary(path: impl AsRef<Path>) -> Result<Vec<Vec<u32>>, SamplerError> {
    let path = path.as_ref();
    let data = fs::read(path)?;
    let index = fs::read(index_path(path))?;
    if data.len() % 4 != 0 || index.len() % 8 != 0 || index.is_empty() {
        return Err(SamplerError::MalformedPacked("truncated file".into()));
    }
    let tokens: Vec<u32> = data
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let offsets: Vec<usize> = index
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    if offsets[0] != 0
        || *offsets.last().unwrap() != tokens.len()
        || offsets.windows(2).any(|w| w[0] > w[1])
    {
        return Err(SamplerError::MalformedPacked(
            "offsets do not match data".into(),
        ));
    }
    Ok(offsets
        .windows(2)
        .map(|w| tokens[w[0]..w[1]].to_vec())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_thousand_tokens_make_three_blocks() {
        let doc: Vec<u32> = (0..5000).collect();
        let lens: Vec<usize> = pack([doc], 2048, 9999)
            .unwrap()
            .iter()
            .map(Vec::len)
            .collect();
        assert_eq!(lens, [2048, 2048, 904]);
    }

    #[test]
    fn empty_stream_packs_to_nothing() {
        assert!(pack(Vec::<Vec<u32>>::new(), 2048, 0).unwrap().is_empty());
    }

    #[test]
    fn separator_goes_between_documents_only() {
        let out = pack([vec![1, 2], vec![3], vec![4, 5]], 3, 0).unwrap();
        assert_eq!(out, vec![vec![1, 2, 0], vec![3, 0, 4], vec![5]]);
    }

    #[test]
    fn rejects_tiny_context() {
        assert!(matches!(
            pack([vec![1]], 1, 0),
            Err(SamplerError::ContextTooShort(1))
        ));
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("packed.bin");
        let seqs = pack([vec![7u32; 10], vec![u32::MAX, 1]], 4, 3).unwrap();
        write_packed_binary(&path, &seqs).unwrap();
        assert_eq!(fs::read(&path).unwrap().len(), 13 * 4);
        assert_eq!(read_packed_binary(&path).unwrap(), seqs);
    }
}
