use anyhow::{bail, Context, Result};
use reapkit_core::matrix::save_matrix_market;
use reapkit_core::rir::{
    compress_csc, compress_csr, decompress_to_csc, decompress_to_csr, deserialize, serialize, KernelTag,
};

use super::{extension, load_csr};
use crate::args::{ConvertArgs, Layout};
use crate::usage;

pub fn run(a: ConvertArgs) -> Result<()> {
    match (extension(&a.input).as_str(), extension(&a.output).as_str()) {
        ("mtx", "rir") => {
            let m = load_csr(&a.input)?;
            let stream = match a.layout {
                Layout::Csr => compress_csr(&m, a.capacity),
                Layout::Csc => compress_csc(&m.to_csc(), a.capacity),
            }
            .map_err(|e| usage(e.to_string()))?;
            let bytes = serialize(&stream);
            std::fs::write(&a.output, &bytes).with_context(|| format!("writing {}", a.output.display()))?;
            let bundles = stream.data_bundles().count();
            println!("bundles: {bundles}");
            println!("split features: {}", stream.split_features());
            println!("nnz: {}", m.nnz());
            println!("bytes: {}", bytes.len());
            Ok(())
        }
        ("rir", "mtx") => {
            let bytes = std::fs::read(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
            let stream = deserialize(&bytes)?;
            let m = match stream.header.kernel {
                KernelTag::CsrRows => decompress_to_csr(&stream)?,
                KernelTag::CscCols => decompress_to_csc(&stream)?.to_csr(),
                KernelTag::Cholesky => bail!("{} holds a Cholesky schedule, not a matrix", a.input.display()),
            };
            save_matrix_market(&a.output, &m)?;
            println!("wrote {} ({}x{}, nnz {})", a.output.display(), m.rows(), m.cols(), m.nnz());
            Ok(())
        }
        (i, o) => Err(usage(format!("cannot convert .{i} to .{o}; use .mtx -> .rir or .rir -> .mtx"))),
    }
}
