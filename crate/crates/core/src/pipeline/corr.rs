/// Pearson correlation over the entries where `joint` is true. `None` when
/// fewer than two joint entries exist or either side has zero variance.
pub fn pearson_corr(x: &[f64], y: &[f64], joint: &[bool]) -> Option<f64> {
    let pairs = || {
        x.iter()
            .zip(y)
            .zip(joint)
            .filter(|(_, &j)| j)
            .map(|((&a, &b), _)| (a, b))
    };
    let n = pairs().count();
    if n < 2 {
        return None;
    }
    let (sx, sy) = pairs().fold((0.0, 0.0), |(sx, sy), (a, b)| (sx + a, sy + b));
    let (mx, my) = (sx / n as f64, sy / n as f64);
    let (mut cxy, mut cxx, mut cyy) = (0.0, 0.0, 0.0);
    for (a, b) in pairs() {
        let (da, db) = (a - mx, b - my);
        cxy += da * db;
        cxx += da * da;
        cyy += db * db;
    }
    if cxx <= 0.0 || cyy <= 0.0 {
        return None;
    }
    Some((cxy / (cxx.sqrt() * cyy.sqrt())).clamp(-1.0, 1.0))
}
