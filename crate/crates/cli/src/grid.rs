//! Image grids as binary PGM (P5) and point grids as CSV.

use crate::error::{CliError, CliResult};

/// Maps a tanh output in [−1, 1] to a grey byte; out-of-range values clamp.
pub fn to_byte(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

/// `rows × cols` cells in row-major order, each an `h × w` image, tiled
/// edge to edge.
pub fn pgm_grid(cells: &[Vec<f64>], rows: usize, cols: usize, (h, w): (usize, usize)) -> CliResult<Vec<u8>> {
    if cells.len() != rows * cols {
        return Err(CliError::usage(format!("{} cells for a {rows}×{cols} grid", cells.len())));
    }
    if let Some(bad) = cells.iter().find(|c| c.len() != h * w) {
        return Err(CliError::usage(format!("cell of {} values, expected {h}×{w}", bad.len())));
    }
    let (width, height) = (cols * w, rows * h);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.reserve(width * height);
    for gr in 0..rows {
        for y in 0..h {
            for gc in 0..cols {
                let cell = &cells[gr * cols + gc];
                out.extend(cell[y * w..(y + 1) * w].iter().map(|&v| to_byte(v)));
            }
        }
    }
    Ok(out)
}

/// Splits a P5 file into `(width, height, pixels)`. Only the header layout
/// [`pgm_grid`] writes is accepted.
pub fn parse_pgm(bytes: &[u8]) -> Option<(usize, usize, &[u8])> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos == start || pos >= bytes.len() {
            return None;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?);
        pos += 1;
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    let (w, h): (usize, usize) = (fields[1].parse().ok()?, fields[2].parse().ok()?);
    let pixels = &bytes[pos..];
    (pixels.len() == w.checked_mul(h)?).then_some((w, h, pixels))
}

/// One line per cell: `row,col,x0,x1,…`.
pub fn points_csv(cells: &[Vec<f64>], cols: usize) -> String {
    let width = cells.first().map_or(0, Vec::len);
    let mut out = String::from("row,col");
    for i in 0..width {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (i, cell) in cells.iter().enumerate() {
        out.push_str(&format!("{},{}", i / cols, i % cols));
        for v in cell {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bytes_follow_affine_map() {
        assert_eq!(to_byte(-1.0), 0);
        assert_eq!(to_byte(1.0), 255);
        assert_eq!(to_byte(0.0), 128);
        assert_eq!(to_byte(-0.5), 64);
        assert_eq!(to_byte(7.0), 255);
    }

    #[test]
    fn grid_tiles_cells_row_major() {
        // 2×2 grid of 1×2 cells
        let cells = vec![vec![-1.0, -1.0], vec![1.0, 1.0], vec![0.0, 0.0], vec![-1.0, 1.0]];
        let pgm = pgm_grid(&cells, 2, 2, (1, 2)).unwrap();
        let (w, h, px) = parse_pgm(&pgm).unwrap();
        assert_eq!((w, h), (4, 2));
        assert_eq!(px, &[0, 0, 255, 255, 128, 128, 0, 255]);
        assert!(pgm_grid(&cells, 1, 2, (1, 2)).is_err());
        assert!(pgm_grid(&cells, 2, 2, (2, 2)).is_err());
    }

    #[test]
    fn parse_rejects_short_payload() {
        let mut pgm = pgm_grid(&[vec![0.0; 4]], 1, 1, (2, 2)).unwrap();
        pgm.pop();
        assert!(parse_pgm(&pgm).is_none());
        assert!(parse_pgm(b"P6\n1 1\n255\n\0").is_none());
    }

    #[test]
    fn csv_lists_cells() {
        let csv = points_csv(&[vec![0.5, -1.0], vec![1.0, 0.25]], 2);
        assert_eq!(csv, "row,col,x0,x1\n0,0,0.5,-1\n0,1,1,0.25\n");
    }
}
