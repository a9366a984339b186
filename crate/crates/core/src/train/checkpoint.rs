//! Binary parameter checkpoints.
//!
//! Layout: the magic bytes `DGMAE1` (the last byte is the format version),
//! a little-endian `u32` tensor count, one `(u32 rows, u32 cols)` pair per
//! tensor, then every tensor's values as little-endian `f64` in declaration
//! order (see [`ModelParams::tensors`]).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::CheckpointError;
use crate::matrix::Matrix;
use crate::model::{GatLayerParams, ModelParams, Projector, LEAKY_SLOPE};

const MAGIC: &[u8; 5] = b"DGMAE";
const VERSION: u8 = b'1';

pub fn write_checkpoint<W: Write>(mut w: W, params: &ModelParams) -> std::io::Result<()> {
    let tensors = params.tensors();
    w.write_all(MAGIC)?;
    w.write_all(&[VERSION])?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in &tensors {
        w.write_all(&(t.rows() as u32).to_le_bytes())?;
        w.write_all(&(t.cols() as u32).to_le_bytes())?;
    }
    for t in &tensors {
        for v in t.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), CheckpointError> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => CheckpointError::Truncated,
        _ => CheckpointError::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ModelParams, CheckpointError> {
    let mut magic = [0u8; 6];
    read_exact(&mut r, &mut magic).map_err(|e| match e {
        CheckpointError::Truncated => CheckpointError::BadMagic,
        e => e,
    })?;
    if &magic[..5] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    if magic[5] != VERSION {
        return Err(CheckpointError::VersionMismatch(magic[5] as char));
    }
    let count = read_u32(&mut r)? as usize;
    // Encoder layers (4 each), bridge, decoder layer, projector.
    if count < 13 || !(count - 9).is_multiple_of(4) {
        return Err(CheckpointError::Layout(format!("{count} tensors")));
    }
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = read_u32(&mut r)? as usize;
        let cols = read_u32(&mut r)? as usize;
        shapes.push((rows, cols));
    }
    let mut tensors = Vec::with_capacity(count);
    for (rows, cols) in shapes {
        let mut bytes = vec![0u8; rows * cols * 8];
        read_exact(&mut r, &mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        tensors.push(Matrix::from_vec(rows, cols, data).expect("length from shape"));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(CheckpointError::Layout("trailing bytes".into()));
    }
    assemble(tensors)
}

fn layer(it: &mut impl Iterator<Item = Matrix>, concat_heads: bool) -> Result<GatLayerParams, CheckpointError> {
    let mut next = || it.next().expect("tensor count checked");
    let (weight, attn_src, attn_dst, bias) = (next(), next(), next(), next());
    let heads = attn_src.rows();
    let head_dim = attn_src.cols();
    let out_dim = if concat_heads { heads * head_dim } else { head_dim };
    if heads == 0
        || attn_dst.shape() != attn_src.shape()
        || weight.cols() != heads * head_dim
        || bias.shape() != (1, out_dim)
    {
        return Err(CheckpointError::Layout("inconsistent attention layer".into()));
    }
    Ok(GatLayerParams {
        weight,
        attn_src,
        attn_dst,
        bias,
        heads,
        concat_heads,
        leaky_slope: LEAKY_SLOPE,
    })
}

fn assemble(tensors: Vec<Matrix>) -> Result<ModelParams, CheckpointError> {
    let num_layers = (tensors.len() - 9) / 4;
    let mut it = tensors.into_iter();
    let mut encoder_layers = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        encoder_layers.push(layer(&mut it, l + 1 < num_layers)?);
    }
    let enc_dec_bridge = it.next().expect("count checked");
    let decoder_layer = layer(&mut it, false)?;
    let mut next = || it.next().expect("count checked");
    let projector = Projector {
        w1: next(),
        b1: next(),
        w2: next(),
        b2: next(),
    };
    let params = ModelParams {
        encoder_layers,
        enc_dec_bridge,
        decoder_layer,
        projector,
    };
    let hidden = params.hidden_dim();
    let chained = params
        .encoder_layers
        .windows(2)
        .all(|w| w[0].out_dim() == w[1].in_dim());
    let last = params.encoder_layers.last().expect("at least one layer");
    if !chained
        || last.out_dim() != hidden
        || params.enc_dec_bridge.cols() != hidden
        || params.decoder_layer.in_dim() != hidden
        || params.projector.w1.rows() != hidden
        || params.projector.w2.cols() != params.decoder_layer.out_dim()
    {
        return Err(CheckpointError::Layout("layer dimensions do not chain".into()));
    }
    Ok(params)
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &ModelParams) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, params)?;
    w.flush()
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams, CheckpointError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
