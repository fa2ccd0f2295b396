//! Octile map file support (MovingAI benchmark style).
//!
//! Format: `type octile`, `height H`, `width W`, `map`, then `H` rows of `W`
//! glyphs. Passable glyphs are `.` and `G`; `@`, `O` and `T` are impassable.
//! Parsed maps carry a neutral 1 m/cell scale until
//! [`WorldMap::with_arena_side`] assigns the mission arena size.

use crate::error::{Error, Result};
use crate::world::{Cell, WorldMap};

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Parse octile text into a square occupancy grid.
pub fn parse_octile(text: &str) -> Result<WorldMap> {
    let mut lines = text.lines().enumerate();

    let mut header = |key: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((idx, raw)) => {
                let line = raw.trim();
                let mut parts = line.splitn(2, char::is_whitespace);
                let found = parts.next().unwrap_or("");
                if found != key {
                    return Err(parse_err(
                        idx + 1,
                        1,
                        format!("expected `{key}` header, found `{found}`"),
                    ));
                }
                Ok((idx + 1, parts.next().unwrap_or("").trim().to_string()))
            }
            None => Err(parse_err(0, 0, format!("missing `{key}` header"))),
        }
    };

    let (_, kind) = header("type")?;
    if kind != "octile" {
        return Err(parse_err(1, 6, format!("unsupported map type `{kind}`")));
    }
    let (hline, hval) = header("height")?;
    let height: usize = hval
        .parse()
        .map_err(|_| parse_err(hline, 8, format!("bad height `{hval}`")))?;
    let (wline, wval) = header("width")?;
    let width: usize = wval
        .parse()
        .map_err(|_| parse_err(wline, 7, format!("bad width `{wval}`")))?;
    let (mline, _) = header("map")?;

    if height == 0 || width == 0 {
        return Err(parse_err(hline, 1, "zero map dimension"));
    }

    let mut cells = Vec::with_capacity(width * height);
    let mut rows = 0usize;
    for (idx, raw) in lines {
        let row = raw.trim_end_matches(['\r', '\n']);
        if rows == height {
            if row.trim().is_empty() {
                continue;
            }
            return Err(parse_err(idx + 1, 1, "more map rows than declared height"));
        }
        if row.chars().count() != width {
            return Err(parse_err(
                idx + 1,
                1,
                format!(
                    "row has {} glyphs, header declares width {width}",
                    row.chars().count()
                ),
            ));
        }
        for (col, glyph) in row.chars().enumerate() {
            let cell = match glyph {
                '.' | 'G' => Cell::Free,
                '@' | 'O' | 'T' => Cell::Obstacle,
                other => {
                    return Err(parse_err(
                        idx + 1,
                        col + 1,
                        format!("unknown glyph `{other}`"),
                    ))
                }
            };
            cells.push(cell);
        }
        rows += 1;
    }
    if rows != height {
        return Err(parse_err(
            mline + rows + 1,
            1,
            format!("map body has {rows} rows, header declares {height}"),
        ));
    }
    WorldMap::from_cells(width, height, 1.0, cells)
}

/// Serialize a map back to octile text (`.` free, `@` obstacle).
pub fn to_octile(map: &WorldMap) -> String {
    let mut out = String::with_capacity(map.width() * map.height() + 64);
    out.push_str("type octile\n");
    out.push_str(&format!("height {}\n", map.height()));
    out.push_str(&format!("width {}\n", map.width()));
    out.push_str("map\n");
    for y in 0..map.height() {
        for x in 0..map.width() {
            out.push(match map.cell(x, y) {
                Cell::Free => '.',
                Cell::Obstacle => '@',
            });
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_small_map() {
        let text = "type octile\nheight 2\nwidth 2\nmap\n.@\n..\n";
        let m = parse_octile(text).unwrap();
        assert_eq!(m.width(), 2);
        let free = m.cells().iter().filter(|c| **c == Cell::Free).count();
        assert_eq!(free, 3);
        assert_eq!(m.cell(1, 0), Cell::Obstacle);
    }

    #[test]
    fn glyph_classes_match_counts() {
        // All passable/impassable glyph variants in one body.
        let text = "type octile\nheight 3\nwidth 3\nmap\n.G@\nOT.\nG.@\n";
        let m = parse_octile(text).unwrap();
        let free = m.cells().iter().filter(|c| **c == Cell::Free).count();
        let obstacles = m.cells().iter().filter(|c| **c == Cell::Obstacle).count();
        // Independent glyph count over the body text.
        let body = ".G@OT.G.@";
        let free_glyphs = body.chars().filter(|c| matches!(c, '.' | 'G')).count();
        let wall_glyphs = body.chars().filter(|c| matches!(c, '@' | 'O' | 'T')).count();
        assert_eq!(free, free_glyphs);
        assert_eq!(obstacles, wall_glyphs);
    }

    #[test]
    fn header_mismatch_is_an_error() {
        let text = "type octile\nheight 3\nwidth 2\nmap\n..\n..\n";
        let err = parse_octile(text).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");

        let ragged = "type octile\nheight 2\nwidth 2\nmap\n..\n...\n";
        assert!(parse_octile(ragged).is_err());

        let bad_glyph = "type octile\nheight 2\nwidth 2\nmap\n..\n.x\n";
        let err = parse_octile(bad_glyph).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 6);
                assert_eq!(column, 2);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn rejects_non_square() {
        // Arenas are square; a rectangular body is rejected up front.
        let text = "type octile\nheight 2\nwidth 3\nmap\n...\n...\n";
        assert!(parse_octile(text).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_preserves_grid(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..24usize);
            let cells: Vec<Cell> = (0..n * n)
                .map(|_| if rng.gen_bool(0.3) { Cell::Obstacle } else { Cell::Free })
                .collect();
            let m = WorldMap::from_cells(n, n, 1.0, cells).unwrap();
            let back = parse_octile(&to_octile(&m)).unwrap();
            prop_assert_eq!(back.cells(), m.cells());
        }
    }
}
