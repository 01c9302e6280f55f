//! Snapshot files: a CSV of occupied cells and a greyscale PGM rendering.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};

use super::colony::{Snapshot, SnapshotCell};
use crate::error::{Error, Result};

const HEADER: &str = "step,x,y,item_id,cluster_or_truth_label";

/// Writes `# grid: WxH`, the header and one row per occupied cell.
pub fn write_snapshot_csv<W: Write>(s: &Snapshot, mut out: W) -> Result<()> {
    writeln!(out, "# grid: {}x{}", s.width, s.height)?;
    writeln!(out, "{HEADER}")?;
    for c in &s.cells {
        writeln!(out, "{},{},{},{},{}", s.step, c.x, c.y, c.item_id, c.label)?;
    }
    Ok(())
}

pub fn read_snapshot_csv<R: Read>(source: R) -> Result<Snapshot> {
    let mut dims: Option<(usize, usize)> = None;
    let mut step: Option<u64> = None;
    let mut header_seen = false;
    let mut cells = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let n = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(g) = rest.trim().strip_prefix("grid:") {
                let (w, h) =
                    g.trim().split_once('x').ok_or_else(|| Error::parse(n, "grid comment must read `# grid: WxH`"))?;
                let parse = |v: &str| {
                    v.trim().parse::<usize>().map_err(|_| Error::parse(n, format!("bad grid dimension `{v}`")))
                };
                dims = Some((parse(w)?, parse(h)?));
            }
            continue;
        }
        if !header_seen {
            if line != HEADER {
                return Err(Error::parse(n, format!("expected header `{HEADER}`")));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::parse(n, format!("expected 5 fields, found {}", f.len())));
        }
        let bad = |what: &str, v: &str| Error::parse(n, format!("bad {what} `{v}`"));
        let row_step: u64 = f[0].parse().map_err(|_| bad("step", f[0]))?;
        if *step.get_or_insert(row_step) != row_step {
            return Err(Error::parse(n, "rows mix several steps"));
        }
        cells.push(SnapshotCell {
            x: f[1].parse().map_err(|_| bad("x", f[1]))?,
            y: f[2].parse().map_err(|_| bad("y", f[2]))?,
            item_id: f[3].parse().map_err(|_| bad("item id", f[3]))?,
            label: f[4].parse().map_err(|_| bad("label", f[4]))?,
        });
    }
    let (width, height) = dims.ok_or_else(|| Error::parse(0, "missing `# grid: WxH` comment"))?;
    if width == 0 || height == 0 {
        return Err(Error::validation("grid dimensions must be positive"));
    }
    let mut seen = BTreeSet::new();
    for c in &cells {
        if c.x >= width || c.y >= height {
            return Err(Error::validation(format!("cell ({}, {}) lies outside the grid", c.x, c.y)));
        }
        if !seen.insert((c.x, c.y)) {
            return Err(Error::validation(format!("cell ({}, {}) listed twice", c.x, c.y)));
        }
    }
    Ok(Snapshot { step: step.unwrap_or(0), width, height, cells })
}

/// Binary PGM (P5), `scale` pixels per cell. Empty cells are white; each
/// distinct label gets its own grey level, darker for larger labels.
pub fn render_pgm<W: Write>(s: &Snapshot, scale: usize, mut out: W) -> Result<()> {
    if scale == 0 {
        return Err(Error::validation("scale must be >= 1"));
    }
    let labels: Vec<i64> = s.cells.iter().map(|c| c.label).collect::<BTreeSet<_>>().into_iter().collect();
    let shade = |label: i64| -> u8 {
        let rank = labels.binary_search(&label).unwrap_or(0);
        // Spread labels over 0..=200 so none is confused with the background.
        if labels.len() <= 1 {
            0
        } else {
            (200 - rank * 200 / (labels.len() - 1)) as u8
        }
    };
    let mut cellmap = vec![255u8; s.width * s.height];
    for c in &s.cells {
        cellmap[c.y * s.width + c.x] = shade(c.label);
    }
    let (w, h) = (s.width * scale, s.height * scale);
    write!(out, "P5\n{w} {h}\n255\n")?;
    let mut row = vec![0u8; w];
    for y in 0..s.height {
        for x in 0..s.width {
            row[x * scale..(x + 1) * scale].fill(cellmap[y * s.width + x]);
        }
        for _ in 0..scale {
            out.write_all(&row)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        Snapshot {
            step: 100,
            width: 4,
            height: 3,
            cells: vec![
                SnapshotCell { x: 0, y: 0, item_id: 7, label: 2 },
                SnapshotCell { x: 3, y: 2, item_id: 9, label: 0 },
            ],
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_snapshot_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# grid: 4x3\nstep,x,y,item_id,cluster_or_truth_label\n100,0,0,7,2\n"));
        assert_eq!(read_snapshot_csv(buf.as_slice()).unwrap(), sample());
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_snapshot_csv("step,x,y,item_id,cluster_or_truth_label\n".as_bytes()).is_err());
        let off_grid = "# grid: 2x2\nstep,x,y,item_id,cluster_or_truth_label\n1,5,0,1,0\n";
        assert!(read_snapshot_csv(off_grid.as_bytes()).is_err());
        let twice = "# grid: 2x2\nstep,x,y,item_id,cluster_or_truth_label\n1,0,0,1,0\n1,0,0,2,0\n";
        assert!(read_snapshot_csv(twice.as_bytes()).is_err());
    }

    #[test]
    fn pgm_layout() {
        let mut buf = Vec::new();
        render_pgm(&sample(), 2, &mut buf).unwrap();
        let header = b"P5\n8 6\n255\n";
        assert_eq!(&buf[..header.len()], header);
        let px = &buf[header.len()..];
        assert_eq!(px.len(), 48);
        // Label 2 is the darkest, label 0 the lightest non-empty shade.
        assert_eq!(px[0], 0);
        assert_eq!(px[8 * 5 + 7], 200);
        assert_eq!(px[2], 255);
    }
}
