use super::RetrievedField;

/// One-dimensional derivative at offset 0 from values at integer offsets.
/// Returns the estimate and whether it is only first order.
fn line_derivative(at: impl Fn(isize) -> Option<f64>, spacing: f64) -> (Option<f64>, bool) {
    let Some(f0) = at(0) else { return (None, true) };
    let (m1, p1) = (at(-1), at(1));
    if let (Some(a), Some(b)) = (m1, p1) {
        return (Some((b - a) / (2.0 * spacing)), false);
    }
    if let (Some(b), Some(c)) = (p1, at(2)) {
        return (Some((-3.0 * f0 + 4.0 * b - c) / (2.0 * spacing)), false);
    }
    if let (Some(a), Some(c)) = (m1, at(-2)) {
        return (Some((3.0 * f0 - 4.0 * a + c) / (2.0 * spacing)), false);
    }
    match (m1, p1) {
        (_, Some(b)) => (Some((b - f0) / spacing), true),
        (Some(a), _) => (Some((f0 - a) / spacing), true),
        _ => (None, true),
    }
}

/// Recomputes `u = Ψ_z / r` and `w = −Ψ_r / r` from the stored `Ψ`.
///
/// Centered second-order differences where both neighbours are set, then
/// one-sided three-point stencils, then first-order differences (flagged
/// in `low_order`). Stencils never use unset nodes. On the axis `u = 0` and
/// `w = −2a`, with `a` from the even fit `Ψ ≈ a r² + b r⁴` through the first
/// two off-axis nodes.
pub fn differentiate(field: &mut RetrievedField) {
    let g = field.grid;
    let (dr, dz) = (g.dr(), g.dz());
    let psi = &field.psi;
    let get = |i: isize, j: isize| -> Option<f64> {
        if i < 0 || j < 0 || i as usize >= g.nr || j as usize >= g.nz {
            return None;
        }
        psi[g.index(i as usize, j as usize)]
    };

    for k in 0..g.len() {
        let (i, j) = g.coords(k);
        let (ii, jj) = (i as isize, j as isize);
        field.u[k] = None;
        field.w[k] = None;
        field.low_order[k] = false;
        if psi[k].is_none() {
            continue;
        }
        if i == 0 {
            field.u[k] = Some(0.0);
            let p0 = psi[k].unwrap_or(0.0);
            let (w, low) = match (get(1, jj), get(2, jj)) {
                (Some(p1), Some(p2)) => {
                    let a = (16.0 * (p1 - p0) - (p2 - p0)) / (12.0 * dr * dr);
                    (Some(-2.0 * a), false)
                }
                (Some(p1), None) => (Some(-2.0 * (p1 - p0) / (dr * dr)), true),
                _ => (None, true),
            };
            field.w[k] = w;
            field.low_order[k] = low;
            continue;
        }
        let r = g.r(i);
        let (pz, low_z) = line_derivative(|o| get(ii, jj + o), dz);
        let (pr, low_r) = line_derivative(|o| get(ii + o, jj), dr);
        field.u[k] = pz.map(|d| d / r);
        field.w[k] = pr.map(|d| -d / r);
        field.low_order[k] = low_z || low_r;
    }
}
