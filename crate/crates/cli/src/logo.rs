//! Bundled 100x100 monochrome test image for the one-time-pad demonstration.
//!
//! A procedurally drawn paddle-and-ball motif; any 10,000-bit image does the
//! job, this one just makes transmission errors visible at a glance.

pub const LOGO_WIDTH: usize = 100;
pub const LOGO_HEIGHT: usize = 100;

/// The image as a row-major bit vector (true = black).
pub fn logo_bits() -> Vec<bool> {
    let mut bits = vec![false; LOGO_WIDTH * LOGO_HEIGHT];
    let disc = |cx: f64, cy: f64, r: f64, x: f64, y: f64| -> bool {
        let (dx, dy) = (x - cx, y - cy);
        dx * dx + dy * dy <= r * r
    };
    for y in 0..LOGO_HEIGHT {
        for x in 0..LOGO_WIDTH {
            let (fx, fy) = (x as f64, y as f64);
            // two paddle blades facing each other
            let left_blade = disc(28.0, 38.0, 16.0, fx, fy);
            let right_blade = disc(72.0, 62.0, 16.0, fx, fy);
            // handles as short diagonal bars
            let left_handle = (fx - (14.0 + 0.5 * (fy - 58.0))).abs() < 3.0 && (52.0..72.0).contains(&fy);
            let right_handle =
                (fx - (86.0 - 0.5 * (fy - 28.0))).abs() < 3.0 && (28.0..48.0).contains(&fy);
            // the ball mid-flight, hollow
            let ball = disc(50.0, 50.0, 6.0, fx, fy) && !disc(50.0, 50.0, 3.0, fx, fy);
            // frame
            let frame = x < 2 || y < 2 || x >= LOGO_WIDTH - 2 || y >= LOGO_HEIGHT - 2;
            bits[y * LOGO_WIDTH + x] =
                left_blade ^ right_blade ^ left_handle ^ right_handle ^ ball ^ frame;
        }
    }
    bits
}
