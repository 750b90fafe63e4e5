//! Jacobi eigendecomposition, pseudo-inverse and the spiked-identity solver.

use metasep::linalg::{pinv_apply, spiked_solve, sym_eigen, PINV_REL_TOL};
use metasep::{Matrix, SpikedIdentity, SymMatrix, Vector};

fn main() -> metasep::Result<()> {
    let m = SymMatrix::from_fn(4, |i, j| 1.0 / (1 + i + j) as f64);
    let eig = sym_eigen(&m)?;
    println!("Hilbert(4) eigenvalues: {:?}", eig.values);
    println!("sweeps {}, orthogonality residual {:.1e}", eig.sweeps, eig.orthogonality_residual());

    let b = Matrix::from_fn(2, 4, |i, j| (i + 2 * j) as f64 - 2.5);
    let low_rank = b.gram(1.0);
    let v = Vector::from(vec![1.0, -1.0, 0.5, 2.0]);
    let x = pinv_apply(&low_rank, &v, PINV_REL_TOL)?;
    println!("rank-2 pseudo-inverse solution: {:?}", x.as_ref());

    let s = SpikedIdentity::new(&[1.0, 1.0, 0.0, 0.0], 5.0, 0.2)?;
    let y = spiked_solve(&s, 0.1, &v)?;
    println!("(spiked + 0.1 I)^-1 v = {:?}", y.as_ref());
    println!("check: {:?}", s.matvec(&y).add(&y.scaled(0.1)).as_ref());
    Ok(())
}
