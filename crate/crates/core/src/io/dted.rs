//! DTED level 0/1/2 reader and fixture writer.
//!
//! Layout: UHL (80 bytes), DSI (648), ACC (2700), then one data record per
//! longitude line, west to east. Each record holds its posts south to
//! north as sign-magnitude big-endian 16-bit metres, framed by a 0xAA
//! sentinel, block/longitude/latitude counters and a 32-bit byte-sum
//! checksum.

use thiserror::Error;

use crate::terrain::{Geoid, TerrainGrid};

pub const UHL_LEN: usize = 80;
pub const DSI_LEN: usize = 648;
pub const ACC_LEN: usize = 2700;
pub const HEADER_LEN: usize = UHL_LEN + DSI_LEN + ACC_LEN;
pub const RECORD_SENTINEL: u8 = 0xAA;
pub const VOID: i16 = -32767;

/// Latitude intervals per level, tenths of an arc-second.
const LEVEL_LAT_INTERVAL: [u32; 3] = [300, 30, 10];
/// Allowed longitude / latitude interval ratios (latitude zoning).
const LON_MULTIPLES: [u32; 6] = [1, 2, 3, 4, 6, 10];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DtedError {
    #[error("not a DTED file: missing {0} sentinel")]
    BadMagic(&'static str),
    #[error("checksum mismatch in data record {record}: stored {stored}, computed {computed}")]
    ChecksumMismatch { record: usize, stored: u32, computed: u32 },
    #[error("file truncated: need {needed} bytes, have {found}")]
    TruncatedFile { needed: usize, found: usize },
    #[error("inconsistent header: {0}")]
    InconsistentHeader(String),
    #[error("grid spacing does not match level {level}: {detail}")]
    SpacingMismatch { level: u8, detail: String },
    #[error("height {value} at post {index} cannot be stored as a DTED elevation")]
    HeightOutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtedLevel {
    Level0,
    Level1,
    Level2,
}

impl DtedLevel {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            0 => Some(DtedLevel::Level0),
            1 => Some(DtedLevel::Level1),
            2 => Some(DtedLevel::Level2),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    /// Latitude spacing in tenths of an arc-second.
    pub fn lat_interval(self) -> u32 {
        LEVEL_LAT_INTERVAL[self as usize]
    }

    /// Longitude intervals permitted for this level.
    pub fn lon_intervals(self) -> impl Iterator<Item = u32> {
        let base = self.lat_interval();
        LON_MULTIPLES.iter().map(move |m| m * base)
    }
}

/// Parsed tile with its header intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct DtedTile {
    /// `None` if the DSI level field is not DTED0/1/2.
    pub level: Option<DtedLevel>,
    /// Tenths of an arc-second.
    pub lat_interval: u32,
    pub lon_interval: u32,
    pub grid: TerrainGrid,
}

fn tenths_to_deg(t: i64) -> f64 {
    t as f64 / 36_000.0
}

fn deg_to_tenths(d: f64) -> i64 {
    (d * 36_000.0).round() as i64
}

/// `D..DMMSS` with `deg_digits` degree digits, whole seconds, plus hemisphere.
fn fmt_dms(tenths: i64, deg_digits: usize, pos: char, neg: char, with_tenths: bool) -> String {
    let hemi = if tenths < 0 { neg } else { pos };
    let t = tenths.unsigned_abs();
    let (deg, rem) = (t / 36_000, t % 36_000);
    let (min, rem) = (rem / 600, rem % 600);
    if with_tenths {
        format!("{deg:0deg_digits$}{min:02}{:02}.{}{hemi}", rem / 10, rem % 10)
    } else {
        format!("{deg:0deg_digits$}{min:02}{:02}{hemi}", (rem + 5) / 10)
    }
}

fn parse_dms(field: &[u8], deg_digits: usize, neg: u8, name: &str) -> Result<i64, DtedError> {
    let bad = || DtedError::InconsistentHeader(format!("{name}: {:?}", String::from_utf8_lossy(field)));
    let s = std::str::from_utf8(field).map_err(|_| bad())?;
    let (body, hemi) = s.split_at(s.len() - 1);
    let num = |r: std::ops::Range<usize>| body.get(r).and_then(|x| x.trim().parse::<u64>().ok()).ok_or_else(bad);
    let deg = num(0..deg_digits)?;
    let min = num(deg_digits..deg_digits + 2)?;
    let sec_str = body.get(deg_digits + 2..).ok_or_else(bad)?;
    let sec_tenths = if let Some((whole, frac)) = sec_str.split_once('.') {
        whole.parse::<u64>().map_err(|_| bad())? * 10 + frac.parse::<u64>().map_err(|_| bad())?
    } else {
        sec_str.parse::<u64>().map_err(|_| bad())? * 10
    };
    if min >= 60 || sec_tenths >= 600 {
        return Err(bad());
    }
    let t = (deg * 36_000 + min * 600 + sec_tenths) as i64;
    Ok(if hemi.as_bytes()[0] == neg { -t } else { t })
}

fn parse_uint(field: &[u8], name: &str) -> Result<u32, DtedError> {
    std::str::from_utf8(field)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| DtedError::InconsistentHeader(format!("{name}: {:?}", String::from_utf8_lossy(field))))
}

fn put(buf: &mut [u8], at: usize, s: &str) {
    buf[at..at + s.len()].copy_from_slice(s.as_bytes());
}

fn encode_height(h: i16) -> [u8; 2] {
    let mag = h.unsigned_abs();
    let raw = if h < 0 { 0x8000 | mag } else { mag };
    raw.to_be_bytes()
}

fn decode_height(b: [u8; 2]) -> i16 {
    let raw = u16::from_be_bytes(b);
    let mag = (raw & 0x7FFF) as i16;
    if raw & 0x8000 != 0 {
        -mag
    } else {
        mag
    }
}

fn record_len(n_lat: usize) -> usize {
    8 + 2 * n_lat + 4
}

fn checksum(bytes: &[u8]) -> u32 {
    bytes.iter().fold(0u32, |acc, &b| acc.wrapping_add(b as u32))
}

/// Parses a DTED byte stream.
pub fn read_dted_tile(bytes: &[u8]) -> Result<DtedTile, DtedError> {
    if bytes.len() < 4 || &bytes[..4] != b"UHL1" {
        return Err(DtedError::BadMagic("UHL1"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(DtedError::TruncatedFile {
            needed: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let uhl = &bytes[..UHL_LEN];
    let dsi = &bytes[UHL_LEN..UHL_LEN + DSI_LEN];
    let acc = &bytes[UHL_LEN + DSI_LEN..HEADER_LEN];
    if &dsi[..3] != b"DSI" {
        return Err(DtedError::BadMagic("DSI"));
    }
    if &acc[..3] != b"ACC" {
        return Err(DtedError::BadMagic("ACC"));
    }

    let uhl_lon = parse_dms(&uhl[4..12], 3, b'W', "UHL longitude origin")?;
    let uhl_lat = parse_dms(&uhl[12..20], 3, b'S', "UHL latitude origin")?;
    let lon_interval = parse_uint(&uhl[20..24], "UHL longitude interval")?;
    let lat_interval = parse_uint(&uhl[24..28], "UHL latitude interval")?;
    let n_lon = parse_uint(&uhl[47..51], "UHL longitude line count")? as usize;
    let n_lat = parse_uint(&uhl[51..55], "UHL latitude point count")? as usize;

    let level = match &dsi[59..64] {
        b"DTED0" => Some(DtedLevel::Level0),
        b"DTED1" => Some(DtedLevel::Level1),
        b"DTED2" => Some(DtedLevel::Level2),
        _ => None,
    };
    let lat0 = parse_dms(&dsi[185..194], 2, b'S', "DSI latitude origin")?;
    let lon0 = parse_dms(&dsi[194..204], 3, b'W', "DSI longitude origin")?;
    let dsi_lat_interval = parse_uint(&dsi[273..277], "DSI latitude interval")?;
    let dsi_lon_interval = parse_uint(&dsi[277..281], "DSI longitude interval")?;
    let dsi_n_lat = parse_uint(&dsi[281..285], "DSI latitude line count")? as usize;
    let dsi_n_lon = parse_uint(&dsi[285..289], "DSI longitude line count")? as usize;

    let mismatch = |what: &str, a: i64, b: i64| {
        Err(DtedError::InconsistentHeader(format!("{what}: UHL {a}, DSI {b}")))
    };
    if (uhl_lat - lat0).abs() > 5 {
        return mismatch("latitude origin (tenths of arc-second)", uhl_lat, lat0);
    }
    if (uhl_lon - lon0).abs() > 5 {
        return mismatch("longitude origin (tenths of arc-second)", uhl_lon, lon0);
    }
    if lat_interval != dsi_lat_interval {
        return mismatch("latitude interval", lat_interval as i64, dsi_lat_interval as i64);
    }
    if lon_interval != dsi_lon_interval {
        return mismatch("longitude interval", lon_interval as i64, dsi_lon_interval as i64);
    }
    if n_lat != dsi_n_lat {
        return mismatch("latitude count", n_lat as i64, dsi_n_lat as i64);
    }
    if n_lon != dsi_n_lon {
        return mismatch("longitude count", n_lon as i64, dsi_n_lon as i64);
    }
    if n_lat == 0 || n_lon == 0 || lat_interval == 0 || lon_interval == 0 {
        return Err(DtedError::InconsistentHeader("zero counts or intervals".into()));
    }

    let rlen = record_len(n_lat);
    let needed = HEADER_LEN + n_lon * rlen;
    if bytes.len() < needed {
        return Err(DtedError::TruncatedFile {
            needed,
            found: bytes.len(),
        });
    }

    let mut heights = vec![None; n_lat * n_lon];
    for j in 0..n_lon {
        let rec = &bytes[HEADER_LEN + j * rlen..HEADER_LEN + (j + 1) * rlen];
        if rec[0] != RECORD_SENTINEL {
            return Err(DtedError::InconsistentHeader(format!("data record {j} lacks the 0xAA sentinel")));
        }
        let body = &rec[..rlen - 4];
        let stored = u32::from_be_bytes(rec[rlen - 4..].try_into().unwrap());
        let computed = checksum(body);
        if stored != computed {
            return Err(DtedError::ChecksumMismatch {
                record: j,
                stored,
                computed,
            });
        }
        let lon_count = u16::from_be_bytes([rec[4], rec[5]]) as usize;
        if lon_count != j {
            return Err(DtedError::InconsistentHeader(format!(
                "data record {j} carries longitude count {lon_count}"
            )));
        }
        for i in 0..n_lat {
            let h = decode_height([rec[8 + 2 * i], rec[9 + 2 * i]]);
            heights[i * n_lon + j] = (h != VOID).then_some(h as f64);
        }
    }

    let grid = TerrainGrid::new(
        tenths_to_deg(lat0),
        tenths_to_deg(lon0),
        tenths_to_deg(lat_interval as i64),
        tenths_to_deg(lon_interval as i64),
        n_lat,
        n_lon,
        heights,
        Geoid::default(),
    )
    .map_err(|e| DtedError::InconsistentHeader(e.to_string()))?;
    Ok(DtedTile {
        level,
        lat_interval,
        lon_interval,
        grid,
    })
}

/// Parses a DTED byte stream into a terrain grid with zero undulation.
pub fn read_dted(bytes: &[u8]) -> Result<TerrainGrid, DtedError> {
    read_dted_tile(bytes).map(|t| t.grid)
}

fn interval_tenths(deg: f64, what: &str, level: DtedLevel) -> Result<u32, DtedError> {
    let t = deg * 36_000.0;
    if (t - t.round()).abs() > 1e-6 || t.round() < 1.0 {
        return Err(DtedError::SpacingMismatch {
            level: level.number(),
            detail: format!("{what} spacing {deg}° is not a whole number of tenths of an arc-second"),
        });
    }
    Ok(t.round() as u32)
}

/// Serialises a grid as a DTED tile of the given level. Heights are
/// rounded to whole metres; the geoid is not stored.
pub fn write_dted(g: &TerrainGrid, level: DtedLevel) -> Result<Vec<u8>, DtedError> {
    g.validate().map_err(|e| DtedError::InconsistentHeader(e.to_string()))?;
    let lat_iv = interval_tenths(g.dlat, "latitude", level)?;
    let lon_iv = interval_tenths(g.dlon, "longitude", level)?;
    if lat_iv != level.lat_interval() {
        return Err(DtedError::SpacingMismatch {
            level: level.number(),
            detail: format!("latitude interval {lat_iv} (expected {})", level.lat_interval()),
        });
    }
    if !level.lon_intervals().any(|v| v == lon_iv) {
        return Err(DtedError::SpacingMismatch {
            level: level.number(),
            detail: format!("longitude interval {lon_iv} is not a permitted multiple of {lat_iv}"),
        });
    }
    if g.n_lat > 9999 || g.n_lon > 9999 {
        return Err(DtedError::InconsistentHeader("more than 9999 posts along an axis".into()));
    }
    let lat0 = deg_to_tenths(g.lat0);
    let lon0 = deg_to_tenths(g.lon0);

    let mut uhl = [b' '; UHL_LEN];
    put(&mut uhl, 0, "UHL1");
    put(&mut uhl, 4, &fmt_dms(lon0, 3, 'E', 'W', false));
    put(&mut uhl, 12, &fmt_dms(lat0, 3, 'N', 'S', false));
    put(&mut uhl, 20, &format!("{lon_iv:04}"));
    put(&mut uhl, 24, &format!("{lat_iv:04}"));
    put(&mut uhl, 28, "NA  ");
    put(&mut uhl, 32, "U  ");
    put(&mut uhl, 47, &format!("{:04}", g.n_lon));
    put(&mut uhl, 51, &format!("{:04}", g.n_lat));
    put(&mut uhl, 55, "0");

    let mut dsi = [b' '; DSI_LEN];
    put(&mut dsi, 0, "DSIU");
    put(&mut dsi, 59, &format!("DTED{}", level.number()));
    put(&mut dsi, 87, "01A");
    put(&mut dsi, 147, "MSLWGS84");
    put(&mut dsi, 185, &fmt_dms(lat0, 2, 'N', 'S', true));
    put(&mut dsi, 194, &fmt_dms(lon0, 3, 'E', 'W', true));
    let lat1 = lat0 + (g.n_lat as i64 - 1) * lat_iv as i64;
    let lon1 = lon0 + (g.n_lon as i64 - 1) * lon_iv as i64;
    let corner = |la: i64, lo: i64| format!("{}{}", fmt_dms(la, 2, 'N', 'S', false), fmt_dms(lo, 3, 'E', 'W', false));
    put(&mut dsi, 204, &corner(lat0, lon0));
    put(&mut dsi, 219, &corner(lat1, lon0));
    put(&mut dsi, 234, &corner(lat1, lon1));
    put(&mut dsi, 249, &corner(lat0, lon1));
    put(&mut dsi, 264, "0000000.0");
    put(&mut dsi, 273, &format!("{lat_iv:04}{lon_iv:04}{:04}{:04}00", g.n_lat, g.n_lon));

    let mut acc = [b' '; ACC_LEN];
    put(&mut acc, 0, "ACCNA  NA  NA  NA  ");

    let rlen = record_len(g.n_lat);
    let mut out = Vec::with_capacity(HEADER_LEN + g.n_lon * rlen);
    out.extend_from_slice(&uhl);
    out.extend_from_slice(&dsi);
    out.extend_from_slice(&acc);
    for j in 0..g.n_lon {
        let start = out.len();
        out.push(RECORD_SENTINEL);
        out.extend_from_slice(&(j as u32).to_be_bytes()[1..]);
        out.extend_from_slice(&(j as u16).to_be_bytes());
        out.extend_from_slice(&0u16.to_be_bytes());
        for i in 0..g.n_lat {
            let idx = g.index(i, j);
            let h = match g.heights[idx] {
                None => VOID,
                Some(v) => {
                    let r = v.round();
                    if r.is_nan() || r.abs() > 32766.0 {
                        return Err(DtedError::HeightOutOfRange { index: idx, value: v });
                    }
                    r as i16
                }
            };
            out.extend_from_slice(&encode_height(h));
        }
        let sum = checksum(&out[start..]);
        out.extend_from_slice(&sum.to_be_bytes());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tile(level: DtedLevel, n_lat: usize, n_lon: usize) -> TerrainGrid {
        let iv = level.lat_interval() as f64 / 36_000.0;
        let heights = (0..n_lat * n_lon)
            .map(|k| if k % 7 == 3 { None } else { Some((k as f64 * 37.0) % 900.0 - 200.0) })
            .collect();
        TerrainGrid::new(-35.0, 138.5, iv, iv, n_lat, n_lon, heights, Geoid::default()).unwrap()
    }

    #[test]
    fn sign_magnitude() {
        for h in [0i16, 1, -1, 32766, -32766, VOID, -200] {
            assert_eq!(decode_height(encode_height(h)), h);
        }
        assert_eq!(encode_height(-1), [0x80, 0x01]);
        assert_eq!(encode_height(VOID), [0xFF, 0xFF]);
    }

    #[test]
    fn dms_fields() {
        assert_eq!(fmt_dms(-34 * 36_000 - 30 * 600, 3, 'N', 'S', false), "0343000S");
        assert_eq!(fmt_dms(1_234_567, 3, 'E', 'W', true), "0341736.7E");
        assert_eq!(parse_dms(b"0341736.7E", 3, b'W', "x").unwrap(), 1_234_567);
        assert_eq!(parse_dms(b"343000S", 2, b'S', "x").unwrap(), -34 * 36_000 - 30 * 600);
    }

    #[test]
    fn round_trip_each_level() {
        for level in [DtedLevel::Level0, DtedLevel::Level1, DtedLevel::Level2] {
            let g = tile(level, 9, 5);
            let bytes = write_dted(&g, level).unwrap();
            assert_eq!(bytes.len(), HEADER_LEN + 5 * record_len(9));
            let t = read_dted_tile(&bytes).unwrap();
            assert_eq!(t.level, Some(level));
            assert_eq!(t.grid, g);
        }
    }

    #[test]
    fn header_layout() {
        let g = tile(DtedLevel::Level1, 3, 2);
        let b = write_dted(&g, DtedLevel::Level1).unwrap();
        assert_eq!(&b[0..4], b"UHL1");
        assert_eq!(&b[4..12], b"1383000E");
        assert_eq!(&b[12..20], b"0350000S");
        assert_eq!(&b[20..28], b"00300030");
        assert_eq!(&b[47..55], b"00020003");
        assert_eq!(&b[80..83], b"DSI");
        assert_eq!(&b[80 + 59..80 + 64], b"DTED1");
        assert_eq!(&b[728..731], b"ACC");
        assert_eq!(b[HEADER_LEN], RECORD_SENTINEL);
    }

    #[test]
    fn corrupted_checksum_names_record() {
        let g = tile(DtedLevel::Level1, 4, 3);
        let mut b = write_dted(&g, DtedLevel::Level1).unwrap();
        let rlen = record_len(4);
        b[HEADER_LEN + 2 * rlen - 1] ^= 0x01;
        assert!(matches!(read_dted(&b), Err(DtedError::ChecksumMismatch { record: 1, .. })));
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(read_dted(&[]), Err(DtedError::BadMagic("UHL1")));
        assert_eq!(read_dted(b"HDR1"), Err(DtedError::BadMagic("UHL1")));
        let g = tile(DtedLevel::Level0, 3, 3);
        let b = write_dted(&g, DtedLevel::Level0).unwrap();
        assert!(matches!(read_dted(&b[..b.len() - 1]), Err(DtedError::TruncatedFile { .. })));
        assert!(matches!(read_dted(&b[..100]), Err(DtedError::TruncatedFile { .. })));
        let mut bad = b.clone();
        bad[51..55].copy_from_slice(b"0004");
        assert!(matches!(read_dted(&bad), Err(DtedError::InconsistentHeader(_))));
    }

    #[test]
    fn writer_checks_spacing() {
        let g = tile(DtedLevel::Level1, 3, 3);
        assert!(matches!(write_dted(&g, DtedLevel::Level2), Err(DtedError::SpacingMismatch { level: 2, .. })));
        let mut odd = g.clone();
        odd.dlon = 50.0 / 36_000.0;
        assert!(matches!(write_dted(&odd, DtedLevel::Level1), Err(DtedError::SpacingMismatch { .. })));
        let mut wide = g.clone();
        wide.dlon = 60.0 / 36_000.0;
        assert!(write_dted(&wide, DtedLevel::Level1).is_ok());
        let mut high = g;
        high.heights[0] = Some(40_000.0);
        assert!(matches!(write_dted(&high, DtedLevel::Level1), Err(DtedError::HeightOutOfRange { index: 0, .. })));
    }
}
