use std::path::PathBuf;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Solves the 3x3 normal equations `MᵀM x = Mᵀb` by Cramer's rule.
pub fn normal_equations(m: &[[f64; 3]; 5], b: &[f64; 5]) -> [f64; 3] {
    let mut a = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (row, &bi) in m.iter().zip(b) {
        for i in 0..3 {
            r[i] += row[i] * bi;
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    let det = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(&a);
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut ak = a;
        for i in 0..3 {
            ak[i][k] = r[i];
        }
        *xk = det(&ak) / d;
    }
    x
}
