//! Pauli strings as bitmask pairs: construction, action on basis states,
//! and operator application to a statevector.

use hamlearn::{PauliOperator, PauliString, Statevector};
use std::str::FromStr;

fn main() -> hamlearn::Result<()> {
    // qubit 0 is the least-significant bit and renders rightmost
    let s = PauliString::from_str("XZ")?; // X on qubit 1, Z on qubit 0
    println!("string {s}: x_mask={:#b} z_mask={:#b}", s.x_mask(), s.z_mask());

    for b in 0..4u64 {
        let (phase, flipped) = s.apply_to_basis(b);
        println!("  {s}|{b:02b}> = {} |{flipped:02b}>", phase.to_c64());
    }

    // H = 0.7 XZ - 0.2 ZZ applied to |00>
    let h = PauliOperator::from_terms(
        2,
        [
            (0.7, PauliString::from_str("XZ")?),
            (-0.2, PauliString::from_str("ZZ")?),
        ],
    )?;
    let psi = Statevector::basis_state(2, 0)?;
    let out = h.apply_to_state(&psi)?;
    println!("H|00> amplitudes: {:?}", out.amplitudes());
    println!("one-norm of H: {}", h.one_norm());
    Ok(())
}
