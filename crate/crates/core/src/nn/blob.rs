//! Versioned little-endian parameter files.
//!
//! Layout: `b"SPNN"`, u32 version, architecture descriptor, u64 parameter
//! count, then the flat parameters as f64.

use std::io::{Read, Write};
use std::path::Path;

use super::{ArchKind, ModelArch, NetParams};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"SPNN";
const VERSION: u32 = 1;

fn kind_code(kind: ArchKind) -> u8 {
    match kind {
        ArchKind::Mlp => 0,
        ArchKind::Cnn => 1,
        ArchKind::CnnMlp => 2,
        ArchKind::MlpCnn => 3,
    }
}

fn put_u64(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u64).to_le_bytes());
}

pub fn params_to_bytes(params: &NetParams) -> Vec<u8> {
    let arch = params.arch();
    let mut out = Vec::with_capacity(64 + 8 * params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind_code(arch.kind));
    put_u64(&mut out, arch.input_dim);
    put_u64(&mut out, arch.head_width);
    put_u64(&mut out, arch.mlp_widths.len());
    for &w in &arch.mlp_widths {
        put_u64(&mut out, w);
    }
    put_u64(&mut out, arch.conv_channels.len());
    for (&c, &(kh, kw)) in arch.conv_channels.iter().zip(&arch.conv_kernels) {
        put_u64(&mut out, c);
        put_u64(&mut out, kh);
        put_u64(&mut out, kw);
    }
    put_u64(&mut out, params.len());
    for v in params.as_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.bytes.len() < n {
            return Err(Error::invalid("truncated parameter file"));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::invalid("parameter file field out of range"))
    }

    /// A length prefix that must fit in the remaining bytes.
    fn len(&mut self, item_bytes: usize) -> Result<usize> {
        let n = self.u64()?;
        if n.saturating_mul(item_bytes) > self.bytes.len() {
            return Err(Error::invalid("truncated parameter file"));
        }
        Ok(n)
    }
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<NetParams> {
    let mut c = Cursor { bytes };
    if c.take(4)? != MAGIC {
        return Err(Error::invalid("not a parameter file (bad magic)"));
    }
    let version = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::invalid(format!("unsupported parameter file version {version}")));
    }
    let kind = match c.take(1)?[0] {
        0 => ArchKind::Mlp,
        1 => ArchKind::Cnn,
        2 => ArchKind::CnnMlp,
        3 => ArchKind::MlpCnn,
        k => return Err(Error::invalid(format!("unknown architecture code {k}"))),
    };
    let input_dim = c.u64()?;
    let head_width = c.u64()?;
    let n_mlp = c.len(8)?;
    let mlp_widths = (0..n_mlp).map(|_| c.u64()).collect::<Result<Vec<_>>>()?;
    let n_conv = c.len(24)?;
    let mut conv_channels = Vec::with_capacity(n_conv);
    let mut conv_kernels = Vec::with_capacity(n_conv);
    for _ in 0..n_conv {
        conv_channels.push(c.u64()?);
        conv_kernels.push((c.u64()?, c.u64()?));
    }
    let arch = ModelArch { kind, input_dim, mlp_widths, conv_channels, conv_kernels, head_width };
    let count = c.len(8)?;
    let values: Vec<f64> =
        c.take(count * 8)?.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
    if !c.bytes.is_empty() {
        return Err(Error::invalid("trailing bytes after parameters"));
    }
    NetParams::from_flat(&arch, values)
}

pub fn save_params(params: &NetParams, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&params_to_bytes(params))?;
    Ok(())
}

pub fn load_params(path: impl AsRef<Path>) -> Result<NetParams> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    params_from_bytes(&bytes)
}
