//! Reference implementations written without the library's geometry code.

pub type IBox = [i64; 4];

/// Containment by rasterizing `a` onto the unit grid and testing every cell
/// against `b` grown by `eps`.
pub fn in_by_raster(a: IBox, b: IBox, eps: i64) -> bool {
    let (bx1, by1, bx2, by2) = (b[0] - eps, b[1] - eps, b[2] + eps, b[3] + eps);
    (a[0]..a[2]).all(|x| (a[1]..a[3]).all(|y| x >= bx1 && x < bx2 && y >= by1 && y < by2))
}

/// Rest-upon clauses in exact integer arithmetic with theta = num / den.
pub fn on_by_integers(a: IBox, b: IBox, num: i64, den: i64) -> bool {
    let overlap = (a[2].min(b[2]) - a[0].max(b[0])).max(0);
    let wide_enough = overlap * den >= num * (a[2] - a[0]);
    let bottom_inside = (b[1]..=b[3]).contains(&a[3]);
    let center_above = a[1] + a[3] <= b[1] + b[3];
    wide_enough && bottom_inside && center_above
}

/// Four times the squared center distance, exact for integer boxes.
pub fn dist2_x4(a: IBox, b: IBox) -> i64 {
    let dx = (a[0] + a[2]) - (b[0] + b[2]);
    let dy = (a[1] + a[3]) - (b[1] + b[3]);
    dx * dx + dy * dy
}

pub fn center_distance(a: [f64; 4], b: [f64; 4]) -> f64 {
    let dx = (a[0] + a[2]) / 2.0 - (b[0] + b[2]) / 2.0;
    let dy = (a[1] + a[3]) / 2.0 - (b[1] + b[3]) / 2.0;
    (dx * dx + dy * dy).sqrt()
}
