//! CRF-ladder traces: frame logs, per-window aggregation, CSV I/O and session cutting.
//!
//! A ladder trace holds, for every 1 s window of a clip and every CRF encode of
//! that clip, the mean bitrate and the window VMAF. Frame logs can be turned into
//! ladder traces with [`aggregate_frames`], but ladders are usually ingested
//! directly from CSV.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Lower bound applied to each frame VMAF before taking the harmonic mean.
pub const MIN_FRAME_VMAF: f64 = 0.01;

pub const LADDER_HEADER: [&str; 5] = [
    "clip_id",
    "window_index",
    "crf",
    "mean_rate_bps",
    "window_vmaf",
];
pub const FRAME_LOG_HEADER: [&str; 5] = [
    "clip_id",
    "crf",
    "timestamp_s",
    "frame_size_bytes",
    "frame_vmaf",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub timestamp_s: f64,
    pub size_bytes: u64,
    pub vmaf: f64,
}

/// Per-frame sizes and VMAF scores of one CRF encode of a clip.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameLog {
    clip_id: String,
    crf: u32,
    frames: Vec<Frame>,
}

impl FrameLog {
    pub fn new(clip_id: impl Into<String>, crf: u32, frames: Vec<Frame>) -> Result<Self> {
        for (i, f) in frames.iter().enumerate() {
            if !f.timestamp_s.is_finite() {
                return Err(Error::InvalidFrameLog(format!(
                    "frame {i}: non-finite timestamp"
                )));
            }
            if f.size_bytes == 0 {
                return Err(Error::InvalidFrameLog(format!(
                    "frame {i}: size must be > 0"
                )));
            }
            if !(0.0..=100.0).contains(&f.vmaf) {
                return Err(Error::InvalidFrameLog(format!(
                    "frame {i}: vmaf {} outside [0, 100]",
                    f.vmaf
                )));
            }
        }
        if let Some(i) = frames
            .windows(2)
            .position(|w| w[1].timestamp_s <= w[0].timestamp_s)
        {
            return Err(Error::InvalidFrameLog(format!(
                "timestamps not strictly increasing at frame {}",
                i + 1
            )));
        }
        Ok(Self {
            clip_id: clip_id.into(),
            crf,
            frames,
        })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn crf(&self) -> u32 {
        self.crf
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }
}

/// Mean rate and window VMAF of one CRF encode during one window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderCell {
    pub mean_rate_bps: f64,
    pub window_vmaf: f64,
}

/// Aggregates a frame log into fixed, non-overlapping windows.
///
/// Windows start at the first frame's timestamp. The log is taken to end one
/// mean frame interval after its last frame; a trailing window not fully
/// covered by the log is dropped. Rates are `8 * bytes / window_duration` and
/// window VMAF is the harmonic mean of the frame VMAFs, each clamped to at
/// least [`MIN_FRAME_VMAF`].
pub fn aggregate_frames(log: &FrameLog, window_duration: f64) -> Result<Vec<LadderCell>> {
    if !(window_duration > 0.0 && window_duration.is_finite()) {
        return Err(Error::InvalidFrameLog(format!(
            "window duration must be positive, got {window_duration}"
        )));
    }
    let frames = log.frames();
    let (first, last) = match (frames.first(), frames.last()) {
        (Some(f), Some(l)) => (f.timestamp_s, l.timestamp_s),
        _ => return Err(Error::NoFrames),
    };
    let interval = if frames.len() > 1 {
        (last - first) / (frames.len() - 1) as f64
    } else {
        0.0
    };
    let eps = 1e-9 * window_duration;
    let span = last + interval - first;
    let full_windows = ((span + eps) / window_duration).floor() as usize;

    let mut bytes = vec![0u64; full_windows];
    let mut inv_sum = vec![0.0f64; full_windows];
    let mut counts = vec![0usize; full_windows];
    for f in frames {
        let w = ((f.timestamp_s - first + eps) / window_duration).floor() as usize;
        if w >= full_windows {
            break;
        }
        bytes[w] += f.size_bytes;
        inv_sum[w] += 1.0 / f.vmaf.max(MIN_FRAME_VMAF);
        counts[w] += 1;
    }

    (0..full_windows)
        .map(|w| {
            if counts[w] == 0 {
                return Err(Error::GapInTrace { window: w });
            }
            Ok(LadderCell {
                mean_rate_bps: bytes[w] as f64 * 8.0 / window_duration,
                window_vmaf: counts[w] as f64 / inv_sum[w],
            })
        })
        .collect()
}

/// Borrowed view of consecutive ladder windows with their CRF set.
#[derive(Clone, Copy, Debug)]
pub struct LadderView<'a> {
    pub crf_values: &'a [u32],
    pub windows: &'a [Vec<LadderCell>],
}

/// Per-window, per-CRF rate/VMAF records of one clip.
///
/// `windows()[t][i]` is the cell of window `t` for `crf_values()[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderTrace {
    clip_id: String,
    window_duration: f64,
    crf_values: Vec<u32>,
    windows: Vec<Vec<LadderCell>>,
}

impl LadderTrace {
    pub fn new(
        clip_id: impl Into<String>,
        window_duration: f64,
        crf_values: Vec<u32>,
        windows: Vec<Vec<LadderCell>>,
    ) -> Result<Self> {
        if !(window_duration > 0.0 && window_duration.is_finite()) {
            return Err(Error::InvalidLadder(format!(
                "window duration must be positive, got {window_duration}"
            )));
        }
        if crf_values.is_empty() {
            return Err(Error::InvalidLadder("empty crf set".into()));
        }
        if crf_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidLadder(
                "crf values must be strictly ascending".into(),
            ));
        }
        for (t, window) in windows.iter().enumerate() {
            if window.len() != crf_values.len() {
                return Err(Error::InvalidLadder(format!(
                    "window {t} has {} cells for {} crf values",
                    window.len(),
                    crf_values.len()
                )));
            }
            for (cell, crf) in window.iter().zip(&crf_values) {
                if !(cell.mean_rate_bps >= 0.0 && cell.mean_rate_bps.is_finite()) {
                    return Err(Error::InvalidLadder(format!(
                        "window {t}, crf {crf}: rate {} must be finite and >= 0",
                        cell.mean_rate_bps
                    )));
                }
                if !(0.0..=100.0).contains(&cell.window_vmaf) {
                    return Err(Error::InvalidLadder(format!(
                        "window {t}, crf {crf}: vmaf {} outside [0, 100]",
                        cell.window_vmaf
                    )));
                }
            }
        }
        Ok(Self {
            clip_id: clip_id.into(),
            window_duration,
            crf_values,
            windows,
        })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn window_duration(&self) -> f64 {
        self.window_duration
    }

    pub fn crf_values(&self) -> &[u32] {
        &self.crf_values
    }

    pub fn windows(&self) -> &[Vec<LadderCell>] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn view(&self) -> LadderView<'_> {
        LadderView {
            crf_values: &self.crf_values,
            windows: &self.windows,
        }
    }

    pub fn cell(&self, window: usize, crf: u32) -> Option<&LadderCell> {
        let i = self.crf_values.binary_search(&crf).ok()?;
        self.windows.get(window).map(|w| &w[i])
    }
}

/// Builds a ladder trace from frame logs of one clip, one log per CRF.
///
/// All logs are aggregated with the same window duration; if they cover a
/// different number of windows the ladder is truncated to the shortest.
pub fn ladder_from_frame_logs(logs: &[FrameLog], window_duration: f64) -> Result<LadderTrace> {
    let first = logs.first().ok_or(Error::NoFrames)?;
    let mut by_crf: BTreeMap<u32, Vec<LadderCell>> = BTreeMap::new();
    for log in logs {
        if log.clip_id() != first.clip_id() {
            return Err(Error::InvalidFrameLog(format!(
                "mixed clips {:?} and {:?}",
                first.clip_id(),
                log.clip_id()
            )));
        }
        let cells = aggregate_frames(log, window_duration)?;
        if by_crf.insert(log.crf(), cells).is_some() {
            return Err(Error::InvalidFrameLog(format!(
                "crf {} logged twice",
                log.crf()
            )));
        }
    }
    let len = by_crf.values().map(Vec::len).min().unwrap_or(0);
    let crf_values: Vec<u32> = by_crf.keys().copied().collect();
    let windows = (0..len)
        .map(|t| by_crf.values().map(|cells| cells[t]).collect())
        .collect();
    LadderTrace::new(first.clip_id(), window_duration, crf_values, windows)
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    field: &'static str,
) -> Result<T> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(idx).unwrap_or("");
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        field,
        value: raw.to_string(),
    })
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::InvalidLadder(format!(
            "expected header {:?}, found {:?}",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

/// Reads a single-clip ladder trace from CSV. Row order does not matter.
pub fn read_ladder_trace(input: impl Read) -> Result<LadderTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    check_header(&mut reader, &LADDER_HEADER)?;

    let mut clip_id: Option<String> = None;
    let mut cells: BTreeMap<(usize, u32), LadderCell> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record.get(0).unwrap_or("").trim();
        match &clip_id {
            None => clip_id = Some(id.to_string()),
            Some(existing) if existing != id => {
                return Err(Error::InvalidLadder(format!(
                    "line {line}: clip id {id:?} differs from {existing:?}"
                )))
            }
            Some(_) => {}
        }
        let window: usize = parse_field(&record, 1, "window_index")?;
        let crf: u32 = parse_field(&record, 2, "crf")?;
        let cell = LadderCell {
            mean_rate_bps: parse_field(&record, 3, "mean_rate_bps")?,
            window_vmaf: parse_field(&record, 4, "window_vmaf")?,
        };
        if cells.insert((window, crf), cell).is_some() {
            return Err(Error::DuplicateRow { line, window, crf });
        }
    }

    let clip_id = clip_id.ok_or_else(|| Error::InvalidLadder("no rows".into()))?;
    let mut crf_values: Vec<u32> = cells.keys().map(|&(_, crf)| crf).collect();
    crf_values.sort_unstable();
    crf_values.dedup();
    let window_count = cells.keys().map(|&(w, _)| w + 1).max().unwrap_or(0);

    let mut windows = Vec::with_capacity(window_count);
    for t in 0..window_count {
        let row = crf_values
            .iter()
            .map(|&crf| {
                cells
                    .get(&(t, crf))
                    .copied()
                    .ok_or(Error::IncompleteLadder { window: t, crf })
            })
            .collect::<Result<Vec<_>>>()?;
        windows.push(row);
    }
    LadderTrace::new(clip_id, 1.0, crf_values, windows)
}

pub fn load_ladder_trace(path: impl AsRef<Path>) -> Result<LadderTrace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ladder_trace(file)
}

/// Writes a ladder trace as CSV, ordered by window then CRF.
pub fn write_ladder_trace(trace: &LadderTrace, out: impl Write) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().from_writer(out);
    writer.write_record(LADDER_HEADER)?;
    for (t, window) in trace.windows().iter().enumerate() {
        for (cell, crf) in window.iter().zip(trace.crf_values()) {
            writer.write_record([
                trace.clip_id().to_string(),
                t.to_string(),
                crf.to_string(),
                cell.mean_rate_bps.to_string(),
                cell.window_vmaf.to_string(),
            ])?;
        }
    }
    writer
        .flush()
        .map_err(|e| Error::io("<ladder output>", e))?;
    Ok(())
}

pub fn save_ladder_trace(trace: &LadderTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_ladder_trace(trace, std::io::BufWriter::new(file))
}

/// Reads frame logs from CSV, one [`FrameLog`] per (clip, crf), ordered by clip then crf.
pub fn read_frame_logs(input: impl Read) -> Result<Vec<FrameLog>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    check_header(&mut reader, &FRAME_LOG_HEADER)?;

    let mut groups: BTreeMap<(String, u32), Vec<Frame>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let clip = record.get(0).unwrap_or("").trim().to_string();
        let crf: u32 = parse_field(&record, 1, "crf")?;
        let frame = Frame {
            timestamp_s: parse_field(&record, 2, "timestamp_s")?,
            size_bytes: parse_field(&record, 3, "frame_size_bytes")?,
            vmaf: parse_field(&record, 4, "frame_vmaf")?,
        };
        groups.entry((clip, crf)).or_default().push(frame);
    }
    groups
        .into_iter()
        .map(|((clip, crf), mut frames)| {
            frames.sort_by(|a, b| a.timestamp_s.total_cmp(&b.timestamp_s));
            FrameLog::new(clip, crf, frames)
        })
        .collect()
}

pub fn load_frame_logs(path: impl AsRef<Path>) -> Result<Vec<FrameLog>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_frame_logs(file)
}

/// A contiguous run of windows cut from a clip.
#[derive(Clone, Debug)]
pub struct SessionTrace {
    session_id: String,
    source: Arc<LadderTrace>,
    start_window: usize,
    length: usize,
}

impl SessionTrace {
    pub fn new(
        session_id: impl Into<String>,
        source: Arc<LadderTrace>,
        start_window: usize,
        length: usize,
    ) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidLadder("session length must be > 0".into()));
        }
        if start_window + length > source.len() {
            return Err(Error::InsufficientTrace {
                required: start_window + length,
                available: source.len(),
            });
        }
        Ok(Self {
            session_id: session_id.into(),
            source,
            start_window,
            length,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn source_clip(&self) -> &str {
        self.source.clip_id()
    }

    pub fn source(&self) -> &Arc<LadderTrace> {
        &self.source
    }

    pub fn start_window(&self) -> usize {
        self.start_window
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn windows(&self) -> &[Vec<LadderCell>] {
        &self.source.windows()[self.start_window..self.start_window + self.length]
    }

    pub fn view(&self) -> LadderView<'_> {
        LadderView {
            crf_values: self.source.crf_values(),
            windows: self.windows(),
        }
    }
}

/// Cuts `count` consecutive, non-overlapping sessions of `session_length`
/// windows from the start of a clip. Session ids are `<clip>-s<index>`.
pub fn cut_sessions(
    trace: &Arc<LadderTrace>,
    session_length: usize,
    count: usize,
) -> Result<Vec<SessionTrace>> {
    if session_length == 0 || count == 0 {
        return Err(Error::InvalidLadder(
            "session length and count must be > 0".into(),
        ));
    }
    let required = session_length * count;
    if required > trace.len() {
        return Err(Error::InsufficientTrace {
            required,
            available: trace.len(),
        });
    }
    (0..count)
        .map(|i| {
            SessionTrace::new(
                format!("{}-s{i}", trace.clip_id()),
                Arc::clone(trace),
                i * session_length,
                session_length,
            )
        })
        .collect()
}
