//! The learnable operator model: adjacent Pauli pattern, coefficient
//! tensors for the bias, feature, and output operators, per-datapoint
//! Hamiltonian assembly, logits, and the classification loss.
//!
//! The Hamiltonian for a datapoint with features a is
//!
//!   H(x) = B - sum_f a^f X_f
//!
//! with B, X_f, O_k all real combinations of the same fixed Pauli string
//! pattern, so coefficient arithmetic happens in pattern order and the
//! operators stay Hermitian by construction.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
pub use crate::pauli::Axis;
use crate::pauli::{PauliOperator, PauliString};
use crate::pool::BitstringPool;

/// Ordered basis of 1- and 2-local Pauli strings with adjacent support.
///
/// Ordering: 1-local strings ascending by qubit then axis, followed by
/// 2-local strings ascending by left qubit then by ordered axis pair.
/// The identity string is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliPattern {
    n: u32,
    axes: Vec<Axis>,
    strings: Vec<PauliString>,
}

/// Enumerate the adjacent 1- and 2-local pattern for the given axes.
pub fn generate_adjacent_pattern(n: u32, axes: &[Axis]) -> Result<PauliPattern> {
    if n == 0 {
        return Err(Error::invalid("qubit count must be positive"));
    }
    if axes.is_empty() {
        return Err(Error::invalid("axis set must be non-empty"));
    }
    let mut sorted = axes.to_vec();
    sorted.sort();
    sorted.dedup();

    let mut strings = Vec::new();
    for q in 0..n {
        for &a in &sorted {
            strings.push(PauliString::single(n, q, a)?);
        }
    }
    for q in 0..n.saturating_sub(1) {
        for &a in &sorted {
            for &b in &sorted {
                strings.push(PauliString::from_axes(n, &[(q, a), (q + 1, b)])?);
            }
        }
    }
    Ok(PauliPattern { n, axes: sorted, strings })
}

impl PauliPattern {
    pub fn num_qubits(&self) -> u32 {
        self.n
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    /// Pattern size P.
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn has_y(&self) -> bool {
        self.axes.contains(&Axis::Y)
    }
}

/// One labeled datapoint: D features plus a one-hot class label.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    features: Vec<f64>,
    label: Vec<u8>,
}

impl DataPoint {
    pub fn new(features: Vec<f64>, label: Vec<u8>) -> Result<DataPoint> {
        if features.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
        check_one_hot(&label)?;
        Ok(DataPoint { features, label })
    }

    pub fn from_class(features: Vec<f64>, class: usize, num_classes: usize) -> Result<DataPoint> {
        if class >= num_classes {
            return Err(Error::invalid("class index out of range"));
        }
        let mut label = vec![0u8; num_classes];
        label[class] = 1;
        DataPoint::new(features, label)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self) -> &[u8] {
        &self.label
    }

    pub fn class(&self) -> usize {
        self.label.iter().position(|&t| t == 1).expect("one-hot label")
    }

    pub fn num_features(&self) -> usize {
        self.features.len()
    }

    pub fn num_classes(&self) -> usize {
        self.label.len()
    }
}

fn check_one_hot(label: &[u8]) -> Result<()> {
    if label.iter().any(|&t| t > 1) || label.iter().map(|&t| t as u32).sum::<u32>() != 1 {
        return Err(Error::invalid("label is not one-hot"));
    }
    Ok(())
}

/// Trainable coefficients beta (bias), chi (D x P features), o (K x P outputs)
/// over a shared pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pattern: PauliPattern,
    beta: Vec<f64>,
    chi: Vec<Vec<f64>>,
    out: Vec<Vec<f64>>,
}

impl ModelParameters {
    pub fn new(
        pattern: PauliPattern,
        beta: Vec<f64>,
        chi: Vec<Vec<f64>>,
        out: Vec<Vec<f64>>,
    ) -> Result<ModelParameters> {
        let p = pattern.len();
        let ok = beta.len() == p
            && chi.iter().all(|row| row.len() == p)
            && out.iter().all(|row| row.len() == p);
        if !ok {
            return Err(Error::invalid("coefficient tensor shapes inconsistent with pattern"));
        }
        let finite = beta.iter().chain(chi.iter().flatten()).chain(out.iter().flatten());
        if finite.clone().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite model coefficient"));
        }
        Ok(ModelParameters { pattern, beta, chi, out })
    }

    /// Random initialization: i.i.d. uniform on [-scale, scale].
    pub fn random_init(
        pattern: PauliPattern,
        num_features: usize,
        num_classes: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Result<ModelParameters> {
        let p = pattern.len();
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.gen_range(-scale..=scale)).collect()
        };
        let beta = draw(p);
        let chi = (0..num_features).map(|_| draw(p)).collect();
        let out = (0..num_classes).map(|_| draw(p)).collect();
        ModelParameters::new(pattern, beta, chi, out)
    }

    pub fn pattern(&self) -> &PauliPattern {
        &self.pattern
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn chi(&self) -> &[Vec<f64>] {
        &self.chi
    }

    pub fn output(&self) -> &[Vec<f64>] {
        &self.out
    }

    pub fn beta_mut(&mut self) -> &mut [f64] {
        &mut self.beta
    }

    pub fn chi_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.chi
    }

    pub fn output_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.out
    }

    pub fn num_features(&self) -> usize {
        self.chi.len()
    }

    pub fn num_classes(&self) -> usize {
        self.out.len()
    }

    /// Materialize a coefficient row over the pattern as an operator.
    pub fn to_operator(&self, coeffs: &[f64]) -> Result<PauliOperator> {
        if coeffs.len() != self.pattern.len() {
            return Err(Error::invalid("coefficient row does not match pattern size"));
        }
        PauliOperator::from_terms(
            self.pattern.n,
            coeffs.iter().copied().zip(self.pattern.strings.iter().copied()),
        )
    }

    pub fn bias_operator(&self) -> Result<PauliOperator> {
        self.to_operator(&self.beta)
    }

    pub fn feature_operator(&self, f: usize) -> Result<PauliOperator> {
        self.to_operator(&self.chi[f])
    }

    pub fn output_operator(&self, k: usize) -> Result<PauliOperator> {
        self.to_operator(&self.out[k])
    }

    /// Coefficients of H(x) = B - sum_f a^f X_f in pattern order.
    pub fn hamiltonian_coefficients(&self, x: &DataPoint) -> Result<Vec<f64>> {
        if x.num_features() != self.num_features() {
            return Err(Error::invalid(format!(
                "datapoint has {} features, model expects {}",
                x.num_features(),
                self.num_features()
            )));
        }
        let mut coeffs = self.beta.clone();
        for (f, row) in self.chi.iter().enumerate() {
            let a = x.features()[f];
            for (c, &chi) in coeffs.iter_mut().zip(row) {
                *c -= a * chi;
            }
        }
        Ok(coeffs)
    }

    /// Assemble the data Hamiltonian for one datapoint.
    pub fn assemble_hamiltonian(&self, x: &DataPoint) -> Result<PauliOperator> {
        let coeffs = self.hamiltonian_coefficients(x)?;
        self.to_operator(&coeffs)
    }
}

/// On-disk model document. Coefficient arrays are stored flat in pattern
/// order; JSON float formatting is shortest-round-trip so the arrays
/// reload bit-exactly.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ModelFile {
    pub pattern_version: u32,
    pub n_qubits: u32,
    pub axes: Vec<Axis>,
    pub training_seed: u64,
    pub beta: Vec<f64>,
    pub chi: Vec<f64>,
    pub o: Vec<f64>,
    pub num_features: usize,
    pub num_classes: usize,
}

/// Version of the adjacent-pattern enumeration order.
pub const PATTERN_VERSION: u32 = 1;

impl ModelFile {
    pub fn from_params(params: &ModelParameters, training_seed: u64) -> ModelFile {
        ModelFile {
            pattern_version: PATTERN_VERSION,
            n_qubits: params.pattern().num_qubits(),
            axes: params.pattern().axes().to_vec(),
            training_seed,
            beta: params.beta().to_vec(),
            chi: params.chi().iter().flatten().copied().collect(),
            o: params.output().iter().flatten().copied().collect(),
            num_features: params.num_features(),
            num_classes: params.num_classes(),
        }
    }

    pub fn to_params(&self) -> Result<ModelParameters> {
        if self.pattern_version != PATTERN_VERSION {
            return Err(Error::Data(format!(
                "unsupported pattern version {}",
                self.pattern_version
            )));
        }
        let pattern = generate_adjacent_pattern(self.n_qubits, &self.axes)?;
        let p = pattern.len();
        let unflatten = |flat: &[f64], rows: usize| -> Result<Vec<Vec<f64>>> {
            if flat.len() != rows * p {
                return Err(Error::Data("coefficient array length mismatch".into()));
            }
            Ok(flat.chunks(p).map(|c| c.to_vec()).collect())
        };
        ModelParameters::new(
            pattern,
            self.beta.clone(),
            unflatten(&self.chi, self.num_features)?,
            unflatten(&self.o, self.num_classes)?,
        )
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("model serialization: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<ModelFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read model {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Data(format!("model parse: {e}")))
    }
}

/// Logits l_k = psi0^dag proj(O_k) psi0 for a normalized subspace vector.
pub fn logits(
    params: &ModelParameters,
    psi0: &[Complex64],
    pool: &BitstringPool,
) -> Result<Vec<f64>> {
    if psi0.len() != pool.len() {
        return Err(Error::invalid("subspace vector length does not match pool size"));
    }
    let norm: f64 = psi0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::contract(format!("psi0 not normalized: |psi0| = {norm}")));
    }
    let mut out = Vec::with_capacity(params.num_classes());
    for k in 0..params.num_classes() {
        let op = params.output_operator(k)?;
        let l = expectation_in_pool(&op, psi0, pool)?;
        out.push(l);
    }
    Ok(out)
}

/// psi^dag proj(A) psi without building the dense projected matrix.
pub(crate) fn expectation_in_pool(
    op: &PauliOperator,
    psi: &[Complex64],
    pool: &BitstringPool,
) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(c, s) in op.terms() {
        let mut term = Complex64::new(0.0, 0.0);
        for (j, &b) in pool.bitstrings().iter().enumerate() {
            let (phase, b_out) = s.apply_to_basis(b);
            if let Some(i) = pool.index_of(b_out) {
                term += psi[i].conj() * phase.to_c64() * psi[j];
            }
        }
        acc += c * term;
    }
    if acc.im.abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "expectation has imaginary part {} beyond tolerance",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Numerically stable softmax cross-entropy with its logit gradient.
pub fn softmax_cross_entropy(logits: &[f64], label: &[u8]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != label.len() {
        return Err(Error::invalid("logit and label lengths differ"));
    }
    check_one_hot(label)?;
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("non-finite logit"));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let probs: Vec<f64> = exps.iter().map(|e| e / total).collect();

    let class = label.iter().position(|&t| t == 1).unwrap();
    // loss = -(l_c - max - ln total), avoids log of a tiny probability
    let loss = (total.ln() + max) - logits[class];
    let grad: Vec<f64> = probs
        .iter()
        .zip(label)
        .map(|(&p, &t)| p - t as f64)
        .collect();
    Ok((loss.max(0.0), grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pattern_size_examples() {
        let axes = [Axis::X, Axis::Z];
        assert_eq!(generate_adjacent_pattern(1, &axes).unwrap().len(), 2);
        assert_eq!(generate_adjacent_pattern(2, &axes).unwrap().len(), 8);
        assert_eq!(generate_adjacent_pattern(3, &axes).unwrap().len(), 14);
        assert!(generate_adjacent_pattern(0, &axes).is_err());
    }

    #[test]
    fn pattern_excludes_identity_and_is_adjacent() {
        let pat = generate_adjacent_pattern(4, &[Axis::X, Axis::Z]).unwrap();
        for s in pat.strings() {
            assert!(!s.is_identity());
            let lo = s.locality();
            assert!(lo == 1 || lo == 2);
            if lo == 2 {
                let support = s.x_mask() | s.z_mask();
                let q = support.trailing_zeros();
                assert_eq!(support, 0b11 << q, "non-adjacent support in {s}");
            }
        }
    }

    #[test]
    fn pattern_ordering_is_documented() {
        let pat = generate_adjacent_pattern(2, &[Axis::X, Axis::Z]).unwrap();
        let words: Vec<String> = pat.strings().iter().map(|s| s.to_string()).collect();
        assert_eq!(words, ["IX", "IZ", "XI", "ZI", "XX", "ZX", "XZ", "ZZ"]);
    }

    fn tiny_params() -> ModelParameters {
        // n=1, pattern [X0, Z0]; beta = 0.5 Z0, one feature chi = 0.2 X0.
        let pat = generate_adjacent_pattern(1, &[Axis::X, Axis::Z]).unwrap();
        ModelParameters::new(pat, vec![0.0, 0.5], vec![vec![0.2, 0.0]], vec![vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn hamiltonian_assembly_matches_hand_expansion() {
        let params = tiny_params();
        let x = DataPoint::from_class(vec![2.0], 0, 2).unwrap();
        // one-hot with K=2 needs out rows of len 2; rebuild with K=1 simpler:
        let x = DataPoint::new(x.features().to_vec(), vec![1]).unwrap();
        let h = params.assemble_hamiltonian(&x).unwrap();
        // 0.5 Z0 - 2.0 * 0.2 X0
        let coeffs: Vec<f64> = h.terms().iter().map(|&(c, _)| c).collect();
        assert_abs_diff_eq!(coeffs[0], -0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(coeffs[1], 0.5, epsilon = 1e-15);

        let zero = DataPoint::new(vec![0.0], vec![1]).unwrap();
        let h0 = params.assemble_hamiltonian(&zero).unwrap();
        assert_eq!(h0.terms()[0].0, 0.0);
        assert_eq!(h0.terms()[1].0, 0.5);
    }

    #[test]
    fn assembly_is_affine_in_features() {
        let params = tiny_params();
        let a = DataPoint::new(vec![1.25], vec![1]).unwrap();
        let b = DataPoint::new(vec![1.25 + 0.5], vec![1]).unwrap();
        let ca = params.hamiltonian_coefficients(&a).unwrap();
        let cb = params.hamiltonian_coefficients(&b).unwrap();
        for p in 0..ca.len() {
            assert_abs_diff_eq!(cb[p] - ca[p], -0.5 * params.chi()[0][p], epsilon = 1e-15);
        }
    }

    #[test]
    fn logit_examples() {
        let pat = generate_adjacent_pattern(1, &[Axis::X, Axis::Z]).unwrap();
        // O_0 = Z0.
        let params =
            ModelParameters::new(pat.clone(), vec![0.0; 2], vec![], vec![vec![0.0, 1.0]]).unwrap();
        let pool = BitstringPool::from_bitstrings(1, [0, 1]).unwrap();
        let psi = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let l = logits(&params, &psi, &pool).unwrap();
        assert_abs_diff_eq!(l[0], 1.0, epsilon = 1e-12);

        // O_0 = X0 on |+>.
        let params_x = ModelParameters::new(pat, vec![0.0; 2], vec![], vec![vec![1.0, 0.0]]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
        let l = logits(&params_x, &plus, &pool).unwrap();
        assert_abs_diff_eq!(l[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn logit_zz_on_bell_like_vector() {
        // O_0 = Z0 Z1, pool = [00, 11], psi = (|00> + |11>)/sqrt(2) -> +1.
        let pat = generate_adjacent_pattern(2, &[Axis::X, Axis::Z]).unwrap();
        let mut o = vec![0.0; pat.len()];
        let zz = pat.strings().iter().position(|s| s.to_string() == "ZZ").unwrap();
        o[zz] = 1.0;
        let params = ModelParameters::new(pat, vec![0.0; 8], vec![], vec![o]).unwrap();
        let pool = BitstringPool::from_bitstrings(2, [0b00, 0b11]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = vec![Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
        let l = logits(&params, &psi, &pool).unwrap();
        assert_abs_diff_eq!(l[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unnormalized_vector_rejected() {
        let params = tiny_params();
        let pool = BitstringPool::from_bitstrings(1, [0, 1]).unwrap();
        let psi = vec![Complex64::new(0.9, 0.0), Complex64::new(0.0, 0.0)];
        assert!(logits(&params, &psi, &pool).is_err());
    }

    #[test]
    fn softmax_cross_entropy_examples() {
        let (loss, grad) = softmax_cross_entropy(&[0.0, 0.0], &[1, 0]).unwrap();
        assert_abs_diff_eq!(loss, std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[1], 0.5, epsilon = 1e-12);

        let (loss, grad) = softmax_cross_entropy(&[3.0f64.ln(), 0.0], &[1, 0]).unwrap();
        assert_abs_diff_eq!(loss, (4.0f64 / 3.0).ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(grad[0], -0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[1], 0.25, epsilon = 1e-12);

        let (loss, _) = softmax_cross_entropy(&[100.0, 0.0], &[1, 0]).unwrap();
        assert!(loss < 1e-10);
        assert!(loss.is_finite());
    }

    #[test]
    fn softmax_rejects_bad_labels() {
        assert!(softmax_cross_entropy(&[0.0, 0.0], &[1, 1]).is_err());
        assert!(softmax_cross_entropy(&[0.0, 0.0], &[0, 0]).is_err());
    }

    #[test]
    fn softmax_probabilities_sum_to_one() {
        let logits = [1.7, -0.3, 0.4];
        let (_, grad) = softmax_cross_entropy(&logits, &[0, 1, 0]).unwrap();
        // sum(p - tau) = 1 - 1 = 0 within 1e-12
        let total: f64 = grad.iter().sum();
        assert_abs_diff_eq!(total, 0.0, epsilon = 1e-12);
    }
}
