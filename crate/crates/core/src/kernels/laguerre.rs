/// Associated Laguerre polynomial `L_r^k(x)` by the three-term recurrence in `r`:
/// `(m+1) L_{m+1} = (2m + 1 + k - x) L_m - (m + k) L_{m-1}`.
pub fn laguerre(r: u32, k: u32, x: f64) -> f64 {
    let k = k as f64;
    let mut prev = 1.0;
    if r == 0 {
        return prev;
    }
    let mut cur = 1.0 + k - x;
    for m in 1..r {
        let m = m as f64;
        let next = ((2.0 * m + 1.0 + k - x) * cur - (m + k) * prev) / (m + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
