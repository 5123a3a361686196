//! Directory format: `A.mtx`, `B.mtx`, `f.mtx`, `g.mtx` and a one-line `kind`
//! file containing `SPD` or `SemiSPD`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mtx;

use super::{validate, SaddleSystem, SystemKind};

pub fn write_system(dir: &Path, sys: &SaddleSystem) -> Result<()> {
    fs::create_dir_all(dir)?;
    mtx::write_matrix(&dir.join("A.mtx"), sys.a())?;
    mtx::write_matrix(&dir.join("B.mtx"), sys.b())?;
    mtx::write_vector(&dir.join("f.mtx"), sys.f())?;
    mtx::write_vector(&dir.join("g.mtx"), sys.g())?;
    fs::write(dir.join("kind"), format!("{}\n", sys.kind()))?;
    Ok(())
}

/// Reads and validates a system. A `kind` tag that disagrees with the
/// computed classification is an error.
pub fn read_system(dir: &Path) -> Result<SaddleSystem> {
    let a = mtx::read_matrix(&dir.join("A.mtx"))?;
    let b = mtx::read_matrix(&dir.join("B.mtx"))?;
    let f = mtx::read_vector(&dir.join("f.mtx"))?;
    let g = mtx::read_vector(&dir.join("g.mtx"))?;
    let tag = fs::read_to_string(dir.join("kind"))?;
    let declared: SystemKind = tag.parse()?;
    let sys = validate(a, b, f, g)?;
    if sys.kind() != declared {
        return Err(Error::WrongKind {
            expected: match declared {
                SystemKind::Spd => "SPD",
                SystemKind::SemiSpd => "SemiSPD",
            },
        });
    }
    Ok(sys)
}
