//! Event-level simulation: time-tagged photon streams and their reduction
//! to per-pattern counts.
//!
//! Instead of sampling one number per acquisition, this path generates the
//! individual detector clicks and reduces them the way the bench would:
//!
//! * continuous-wave counting integrates every tag on the signal channel,
//! * heralded detection histograms signal/idler delays, finds the
//!   coincidence peak, and counts pairs inside the window T_c around it,
//! * pulsed detection cross-correlates the signal channel against the known
//!   pulse template and takes the correlation maximum.
//!
//! Background light is a homogeneous Poisson process; at the modeled rates
//! its coherence time is far below the gating windows, so thermal bunching
//! is invisible to these reductions and the Poisson process is an adequate
//! stand-in (the accumulated-statistics path keeps the full thermal
//! variance). Detector timing jitter smears pair arrivals with a Gaussian
//! of configurable FWHM.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::photostat::{poisson_count, Scheme, SchemeConfig};
use crate::stats::erf;

/// Default time-bin width for histograms and correlations.
pub const DEFAULT_RESOLUTION: f64 = 100e-12;
/// Default detector timing jitter, full width at half maximum.
pub const DEFAULT_JITTER_FWHM: f64 = 300e-12;
/// Default half-range scanned when locating the coincidence peak.
pub const DEFAULT_G2_RANGE: f64 = 10e-9;
/// FWHM of a Gaussian in units of its sigma, 2*sqrt(2 ln 2).
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;
/// Dense correlation arrays beyond this many lags must use the sparse path.
const MAX_DENSE_LAGS: usize = 1 << 26;

/// Physical detector that produced a tag stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    SignalDetector,
    IdlerDetector,
}

/// Sorted arrival times from one detector over one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTagStream {
    pub channel: Channel,
    /// Arrival times in seconds, non-decreasing, each in [0, span).
    pub tags: Vec<f64>,
    /// Time-bin resolution associated with the stream, seconds.
    pub resolution: f64,
    /// Acquisition span in seconds.
    pub span: f64,
}

impl TimeTagStream {
    pub fn new(channel: Channel, tags: Vec<f64>, resolution: f64, span: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidArgument(
                "stream resolution must be positive".into(),
            ));
        }
        if !(span > 0.0) || !span.is_finite() {
            return Err(Error::InvalidArgument("stream span must be positive".into()));
        }
        let sorted = tags.windows(2).all(|w| w[0] <= w[1]);
        if !sorted {
            return Err(Error::InvalidArgument("tags must be sorted".into()));
        }
        if tags.iter().any(|&t| !(0.0..span).contains(&t)) {
            return Err(Error::InvalidArgument(
                "tags must lie within [0, span)".into(),
            ));
        }
        Ok(TimeTagStream {
            channel,
            tags,
            resolution,
            span,
        })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// Rectangular transmitter pulse: on during [start, start + width) within
/// each period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTemplate {
    pub start: f64,
    pub width: f64,
    pub period: f64,
}

impl PulseTemplate {
    pub fn new(start: f64, width: f64, period: f64) -> Result<Self> {
        let ok = start >= 0.0
            && width > 0.0
            && period > 0.0
            && start + width <= period
            && [start, width, period].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "pulse template start {start} width {width} period {period} is inconsistent"
            )));
        }
        Ok(PulseTemplate {
            start,
            width,
            period,
        })
    }
}

/// Tunables of the event-level reduction. The defaults match the modeled
/// tagger: 100 ps bins, 300 ps detector jitter, a 10 ns peak search range,
/// and the pulse at the start of the acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOptions {
    /// Histogram and correlation bin width.
    pub resolution: f64,
    /// Detector timing jitter FWHM; zero disables jitter.
    pub jitter_fwhm: f64,
    /// Half-range of the delay histogram used to locate the pair peak.
    pub g2_range: f64,
    /// Offset of the transmitter pulse within the acquisition.
    pub pulse_start: f64,
}

impl Default for EventOptions {
    fn default() -> Self {
        EventOptions {
            resolution: DEFAULT_RESOLUTION,
            jitter_fwhm: DEFAULT_JITTER_FWHM,
            g2_range: DEFAULT_G2_RANGE,
            pulse_start: 0.0,
        }
    }
}

impl EventOptions {
    fn validate(&self, cfg: &SchemeConfig) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution <= cfg.t_c) {
            return Err(Error::InvalidArgument(format!(
                "resolution {} outside (0, t_c]",
                self.resolution
            )));
        }
        if !(self.jitter_fwhm >= 0.0) || !self.jitter_fwhm.is_finite() {
            return Err(Error::InvalidArgument("jitter must be non-negative".into()));
        }
        if !(self.g2_range >= cfg.t_c) {
            return Err(Error::InvalidArgument(
                "peak search range must cover the coincidence window".into(),
            ));
        }
        if !(self.pulse_start >= 0.0 && self.pulse_start + cfg.t_w <= cfg.t_aq) {
            return Err(Error::InvalidArgument(
                "pulse must fit inside the acquisition".into(),
            ));
        }
        Ok(())
    }
}

/// Fraction of true pairs whose jittered separation lands inside a centered
/// window of full width `window`. Both detectors jitter independently, so
/// the separation is Gaussian with sigma_sep = sqrt(2) * sigma_detector.
pub fn pair_capture_fraction(jitter_fwhm: f64, window: f64) -> f64 {
    assert!(jitter_fwhm >= 0.0 && window > 0.0);
    if jitter_fwhm == 0.0 {
        return 1.0;
    }
    let sigma = jitter_fwhm / FWHM_PER_SIGMA;
    // P(|N(0, sqrt(2) sigma)| <= window/2) = erf(window / (4 sigma)).
    erf(window / (4.0 * sigma))
}

/// Background tags over one acquisition: a homogeneous Poisson process on
/// the signal channel whose expected total equals the accumulated
/// background mean E[mu_b] of the config.
pub fn gen_noise_stream<R: Rng + ?Sized>(
    cfg: &SchemeConfig,
    opts: &EventOptions,
    rng: &mut R,
) -> Result<TimeTagStream> {
    cfg.validate()?;
    opts.validate(cfg)?;
    let mean = cfg.mean_background()?;
    let tags = uniform_tags(poisson_count(mean, rng), cfg.t_aq, rng);
    TimeTagStream::new(Channel::SignalDetector, tags, opts.resolution, cfg.t_aq)
}

/// Signal tags of a pulsed (or continuous-wave) classical source: a Poisson
/// total with the calibrated per-acquisition mean, spread uniformly over the
/// template's on-interval.
pub fn gen_pulsed_signal_stream<R: Rng + ?Sized>(
    cfg: &SchemeConfig,
    chi_tilde: f64,
    template: &PulseTemplate,
    opts: &EventOptions,
    rng: &mut R,
) -> Result<TimeTagStream> {
    cfg.validate()?;
    opts.validate(cfg)?;
    check_overlap(chi_tilde)?;
    if cfg.scheme == Scheme::Qspi {
        return Err(Error::InvalidArgument(
            "pulsed signal generation needs a classical config".into(),
        ));
    }
    if (template.period - cfg.t_aq).abs() > 1e-12 * cfg.t_aq {
        return Err(Error::InvalidArgument(
            "template period must equal the acquisition span".into(),
        ));
    }
    let mean = cfg.mean_signal(chi_tilde)?;
    let mut tags = uniform_tags(poisson_count(mean, rng), template.width, rng);
    for t in &mut tags {
        *t += template.start;
    }
    TimeTagStream::new(Channel::SignalDetector, tags, opts.resolution, cfg.t_aq)
}

/// Signal and idler tag streams of the photon-pair source.
///
/// Idler clicks form a Poisson process at the accumulated idler rate. Each
/// idler click heralds a detected signal click with the thinning probability
/// p = eta_h * E[mu_s] / (E[mu_i] * capture), where the capture factor
/// compensates the pairs that detector jitter pushes outside the coincidence
/// window; the heralding efficiency is defined as the measured ratio of
/// windowed coincidences to signal counts, so the window loss belongs in the
/// generator, not the analysis. Both clicks of a pair receive independent
/// Gaussian jitter; the intrinsic pair separation is below the tagger
/// resolution and is modeled as zero.
pub fn gen_pair_streams<R: Rng + ?Sized>(
    cfg: &SchemeConfig,
    chi_tilde: f64,
    opts: &EventOptions,
    rng: &mut R,
) -> Result<(TimeTagStream, TimeTagStream)> {
    cfg.validate()?;
    opts.validate(cfg)?;
    check_overlap(chi_tilde)?;
    if cfg.scheme != Scheme::Qspi {
        return Err(Error::InvalidArgument(
            "pair generation needs a quantum config".into(),
        ));
    }
    let mu_i = cfg.mean_idler()?;
    let mu_s = cfg.mean_signal(chi_tilde)?;
    let capture = pair_capture_fraction(opts.jitter_fwhm, cfg.t_c);
    let p = if mu_i > 0.0 && mu_s > 0.0 {
        cfg.eta_h * mu_s / (mu_i * capture)
    } else {
        0.0
    };
    if p > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "heralded rate needs thinning probability {p} > 1"
        )));
    }

    let sigma = opts.jitter_fwhm / FWHM_PER_SIGMA;
    let jitter = if sigma > 0.0 {
        Some(Normal::new(0.0, sigma).expect("finite jitter"))
    } else {
        None
    };
    let span = cfg.t_aq;
    let nominal = uniform_tags(poisson_count(mu_i, rng), span, rng);
    let mut idler = Vec::with_capacity(nominal.len());
    let mut signal = Vec::new();
    for &t in &nominal {
        idler.push(smear(t, jitter.as_ref(), span, rng));
        if p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p) {
            signal.push(smear(t, jitter.as_ref(), span, rng));
        }
    }
    idler.sort_by(|a, b| a.total_cmp(b));
    signal.sort_by(|a, b| a.total_cmp(b));
    Ok((
        TimeTagStream::new(Channel::SignalDetector, signal, opts.resolution, span)?,
        TimeTagStream::new(Channel::IdlerDetector, idler, opts.resolution, span)?,
    ))
}

fn uniform_tags<R: Rng + ?Sized>(count: u64, width: f64, rng: &mut R) -> Vec<f64> {
    let mut tags: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * width).collect();
    tags.sort_by(|a, b| a.total_cmp(b));
    tags
}

/// Applies detector jitter and keeps the tag inside [0, span).
fn smear<R: Rng + ?Sized>(
    t: f64,
    jitter: Option<&Normal<f64>>,
    span: f64,
    rng: &mut R,
) -> f64 {
    match jitter {
        None => t,
        Some(n) => (t + n.sample(rng)).clamp(0.0, span * (1.0 - 1e-15)),
    }
}

/// Merges two same-channel streams over the same acquisition.
pub fn merge(a: &TimeTagStream, b: &TimeTagStream) -> Result<TimeTagStream> {
    if a.channel != b.channel {
        return Err(Error::InvalidArgument(
            "cannot merge streams from different channels".into(),
        ));
    }
    if a.span != b.span || a.resolution != b.resolution {
        return Err(Error::InvalidArgument(
            "cannot merge streams with different spans or resolutions".into(),
        ));
    }
    let mut tags = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.tags.len() && j < b.tags.len() {
        if a.tags[i] <= b.tags[j] {
            tags.push(a.tags[i]);
            i += 1;
        } else {
            tags.push(b.tags[j]);
            j += 1;
        }
    }
    tags.extend_from_slice(&a.tags[i..]);
    tags.extend_from_slice(&b.tags[j..]);
    TimeTagStream::new(a.channel, tags, a.resolution, a.span)
}

/// Total counts of the stream: the continuous-wave reduction I_c.
pub fn integrate_counts(stream: &TimeTagStream) -> u64 {
    stream.len() as u64
}

/// Number of (a, b) tag pairs with t_b within the full-width `window`
/// centered at t_a + offset, i.e. |t_b - t_a - offset| <= window/2.
pub fn coincidence_count(
    a: &TimeTagStream,
    b: &TimeTagStream,
    window: f64,
    offset: f64,
) -> u64 {
    assert!(window > 0.0 && window.is_finite(), "window must be positive");
    let half = window / 2.0;
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut count = 0u64;
    for &t in &a.tags {
        let from = t + offset - half;
        let to = t + offset + half;
        while lo < b.tags.len() && b.tags[lo] < from {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < b.tags.len() && b.tags[hi] <= to {
            hi += 1;
        }
        count += (hi - lo) as u64;
    }
    count
}

/// Histogram of pairwise delays t_b - t_a over [-range, range).
#[derive(Debug, Clone, PartialEq)]
pub struct DelayHistogram {
    pub bin: f64,
    pub range: f64,
    pub counts: Vec<u64>,
}

impl DelayHistogram {
    /// Center of bin `i`.
    pub fn center(&self, i: usize) -> f64 {
        -self.range + (i as f64 + 0.5) * self.bin
    }
}

/// Second-order correlation histogram: delays t_b - t_a of every tag pair
/// within the scan range, binned at width `bin`. The range must be an
/// integer number of bins.
pub fn g2_histogram(
    a: &TimeTagStream,
    b: &TimeTagStream,
    bin: f64,
    range: f64,
) -> Result<DelayHistogram> {
    if !(bin > 0.0) || !(range >= bin) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < bin <= range, got bin {bin} range {range}"
        )));
    }
    if a.span != b.span {
        return Err(Error::InvalidArgument(
            "histogram needs streams over the same span".into(),
        ));
    }
    let nbins_f = 2.0 * range / bin;
    let nbins = nbins_f.round();
    if (nbins_f - nbins).abs() > 1e-6 {
        return Err(Error::InvalidArgument(
            "scan range must be an integer number of bins".into(),
        ));
    }
    let nbins = nbins as usize;
    let mut counts = vec![0u64; nbins];
    let (mut lo, mut hi) = (0usize, 0usize);
    for &t in &a.tags {
        let from = t - range;
        let to = t + range;
        while lo < b.tags.len() && b.tags[lo] < from {
            lo += 1;
        }
        if hi < lo {
            hi = lo;
        }
        while hi < b.tags.len() && b.tags[hi] < to {
            hi += 1;
        }
        for &u in &b.tags[lo..hi] {
            // max(0) guards the rounding of u - t at the lower range edge.
            let idx = (((u - t) + range) / bin).floor().max(0.0) as usize;
            counts[idx.min(nbins - 1)] += 1;
        }
    }
    Ok(DelayHistogram { bin, range, counts })
}

/// Location and height of the histogram peak. Ties resolve to the smallest
/// absolute delay, then the smaller delay. An all-zero histogram has no
/// peak.
pub fn peak_delay(hist: &DelayHistogram) -> Result<(f64, u64)> {
    let mut best: Option<(u64, f64, f64)> = None;
    for (i, &c) in hist.counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let center = hist.center(i);
        let key = (c, center.abs(), center);
        let replace = match best {
            None => true,
            Some((bc, babs, bcenter)) => {
                key.0 > bc || (key.0 == bc && (key.1 < babs || (key.1 == babs && key.2 < bcenter)))
            }
        };
        if replace {
            best = Some(key);
        }
    }
    best.map(|(c, _, center)| (center, c)).ok_or(Error::NoPeak)
}

/// Heralded reduction I_q: locate the coincidence peak in the delay
/// histogram, then count pairs inside the full-width window `t_c` around it.
///
/// Counting through an exact window rather than summing histogram bins keeps
/// the accidental-coincidence expectation at rate_b * rate_i * t_c per
/// acquisition regardless of the bin width.
pub fn heralded_counts(
    signal: &TimeTagStream,
    idler: &TimeTagStream,
    t_c: f64,
    bin: f64,
    range: f64,
) -> Result<u64> {
    let hist = g2_histogram(signal, idler, bin, range)?;
    match peak_delay(&hist) {
        Ok((tau_0, _)) => Ok(coincidence_count(signal, idler, t_c, tau_0)),
        Err(Error::NoPeak) => Ok(0),
        Err(e) => Err(e),
    }
}

/// Discretized circular correlation of a tag stream against a rectangular
/// template.
///
/// With L = round(span/bin) lags and W = round(width/bin) on-bins, a tag at
/// time t occupies source bin u = floor((t - start)/bin) mod L and
/// contributes to every lag m with (u - m) mod L < W, so
/// values[m] = #{tags : (u - m) mod L < W}. Each tag is counted at exactly
/// W lags, hence sum(values) = W * count.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub bin: f64,
    pub values: Vec<u64>,
}

impl CorrelationSeries {
    /// Lag of entry `m` in seconds.
    pub fn lag(&self, m: usize) -> f64 {
        m as f64 * self.bin
    }
}

/// Integer geometry shared by the dense and sparse correlation paths.
fn correlation_geometry(
    template: &PulseTemplate,
    stream: &TimeTagStream,
    bin: f64,
) -> Result<(usize, usize)> {
    if !(bin > 0.0) || !bin.is_finite() {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    if (template.period - stream.span).abs() > 1e-12 * stream.span {
        return Err(Error::InvalidArgument(
            "template period must equal the stream span".into(),
        ));
    }
    let lags_f = stream.span / bin;
    let lags = lags_f.round();
    if lags < 1.0 || (lags_f - lags).abs() > 1e-3 * lags {
        return Err(Error::InvalidArgument(
            "bin must divide the acquisition span".into(),
        ));
    }
    let width_f = template.width / bin;
    let width = width_f.round();
    if width < 1.0 || (width_f - width).abs() > 1e-3 * width {
        return Err(Error::InvalidArgument(
            "bin must divide the template width to within one part in 1e3".into(),
        ));
    }
    Ok((lags as usize, width as usize))
}

fn tag_bin(t: f64, start: f64, bin: f64, lags: usize) -> usize {
    let u = ((t - start) / bin).floor() as i64;
    u.rem_euclid(lags as i64) as usize
}

/// Dense circular correlation, materializing every lag. Refuses absurdly
/// long lag grids; production-size acquisitions should use
/// [`max_cross_correlation`], which never materializes the array.
pub fn cross_correlate(
    template: &PulseTemplate,
    stream: &TimeTagStream,
    bin: f64,
) -> Result<CorrelationSeries> {
    let (lags, width) = correlation_geometry(template, stream, bin)?;
    if lags > MAX_DENSE_LAGS {
        return Err(Error::InvalidArgument(format!(
            "{lags} lags exceed the dense correlation limit; use the sparse maximum"
        )));
    }
    let mut diff = vec![0i64; lags + 1];
    for &t in &stream.tags {
        let u = tag_bin(t, template.start, bin, lags);
        // Lags m in [u - width + 1, u] mod lags.
        let lo = u as i64 - width as i64 + 1;
        if lo < 0 {
            diff[(lo + lags as i64) as usize] += 1;
            diff[lags] -= 1;
            diff[0] += 1;
            diff[u + 1] -= 1;
        } else {
            diff[lo as usize] += 1;
            diff[u + 1] -= 1;
        }
    }
    let mut values = Vec::with_capacity(lags);
    let mut acc = 0i64;
    for d in &diff[..lags] {
        acc += d;
        values.push(acc as u64);
    }
    Ok(CorrelationSeries { bin, values })
}

/// Maximum of a correlation series with its lag. Ties resolve to the
/// smallest circular lag distance, then the smaller lag index.
pub fn max_correlation(series: &CorrelationSeries) -> (f64, u64) {
    let lags = series.values.len();
    let mut best = (0u64, usize::MAX, 0usize);
    for (m, &v) in series.values.iter().enumerate() {
        let dist = m.min(lags - m);
        if v > best.0 || (v == best.0 && (dist < best.1 || (dist == best.1 && m < best.2))) {
            best = (v, dist, m);
        }
    }
    (series.lag(best.2), best.0)
}

/// Correlation maximum without materializing the lag array: sweeps the
/// boundaries of each tag's covered lag interval. Produces exactly the
/// result of [`max_correlation`] over [`cross_correlate`].
pub fn max_cross_correlation(
    template: &PulseTemplate,
    stream: &TimeTagStream,
    bin: f64,
) -> Result<(f64, u64)> {
    let (lags, width) = correlation_geometry(template, stream, bin)?;
    if stream.is_empty() {
        return Ok((0.0, 0));
    }
    // (lag boundary, coverage delta); every covered interval is closed on
    // integer lags [lo, hi], entered as +1 at lo and -1 at hi + 1.
    let mut events: Vec<(usize, i64)> = Vec::with_capacity(4 * stream.len());
    for &t in &stream.tags {
        let u = tag_bin(t, template.start, bin, lags);
        let lo = u as i64 - width as i64 + 1;
        if lo < 0 {
            push_interval(&mut events, (lo + lags as i64) as usize, lags - 1, lags);
            push_interval(&mut events, 0, u, lags);
        } else {
            push_interval(&mut events, lo as usize, u, lags);
        }
    }
    events.sort_unstable();

    let consider = |best: &mut (u64, usize, usize), value: u64, m: usize| {
        let dist = m.min(lags - m);
        if value > best.0
            || (value == best.0 && (dist < best.1 || (dist == best.1 && m < best.2)))
        {
            *best = (value, dist, m);
        }
    };
    let mut best = (0u64, 0usize, 0usize); // lag 0 has value 0 unless covered
    let mut value = 0i64;
    let mut i = 0;
    while i < events.len() {
        let at = events[i].0;
        while i < events.len() && events[i].0 == at {
            value += events[i].1;
            i += 1;
        }
        if at >= lags {
            continue;
        }
        // Segment [at, next_at - 1] holds `value`; its circular-distance
        // minimum sits at an endpoint, so endpoints are the only candidates.
        let next_at = if i < events.len() {
            events[i].0.min(lags)
        } else {
            lags
        };
        consider(&mut best, value as u64, at);
        consider(&mut best, value as u64, next_at - 1);
    }
    let lag = best.2 as f64 * bin;
    Ok((lag, best.0))
}

fn push_interval(events: &mut Vec<(usize, i64)>, lo: usize, hi: usize, lags: usize) {
    debug_assert!(lo <= hi && hi < lags);
    events.push((lo, 1));
    events.push((hi + 1, -1));
}

/// One event-level acquisition: the reduced count plus the recorded streams.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    /// Scheme count extracted from the streams.
    pub count: u64,
    /// Everything the signal detector recorded (source plus background).
    pub signal: TimeTagStream,
    /// Idler detector record; present for heralded acquisitions only.
    pub idler: Option<TimeTagStream>,
}

/// Runs one event-level acquisition and reduces it to the scheme's count.
pub fn measure_event<R: Rng + ?Sized>(
    cfg: &SchemeConfig,
    chi_tilde: f64,
    rng: &mut R,
) -> Result<u64> {
    measure_event_with(cfg, chi_tilde, &EventOptions::default(), rng)
}

/// [`measure_event`] with explicit reduction options.
pub fn measure_event_with<R: Rng + ?Sized>(
    cfg: &SchemeConfig,
    chi_tilde: f64,
    opts: &EventOptions,
    rng: &mut R,
) -> Result<u64> {
    Ok(acquire_event(cfg, chi_tilde, opts, rng)?.count)
}

/// Generates the detector streams of one acquisition and reduces them:
/// integration for continuous-wave counting, windowed coincidences at the
/// histogram peak for heralded counting, and the correlation maximum against
/// the pulse template for pulsed counting.
pub fn acquire_event<R: Rng + ?Sized>(
    cfg: &SchemeConfig,
    chi_tilde: f64,
    opts: &EventOptions,
    rng: &mut R,
) -> Result<EventRecord> {
    match cfg.scheme {
        Scheme::Cspi => {
            let template = PulseTemplate::new(0.0, cfg.t_aq, cfg.t_aq)?;
            let signal = gen_pulsed_signal_stream(cfg, chi_tilde, &template, opts, rng)?;
            let noise = gen_noise_stream(cfg, opts, rng)?;
            let merged = merge(&signal, &noise)?;
            Ok(EventRecord {
                count: integrate_counts(&merged),
                signal: merged,
                idler: None,
            })
        }
        Scheme::Qspi => {
            let (signal, idler) = gen_pair_streams(cfg, chi_tilde, opts, rng)?;
            let noise = gen_noise_stream(cfg, opts, rng)?;
            let merged = merge(&signal, &noise)?;
            let count =
                heralded_counts(&merged, &idler, cfg.t_c, opts.resolution, opts.g2_range)?;
            Ok(EventRecord {
                count,
                signal: merged,
                idler: Some(idler),
            })
        }
        Scheme::Pspi => {
            let template = PulseTemplate::new(opts.pulse_start, cfg.t_w, cfg.t_aq)?;
            let signal = gen_pulsed_signal_stream(cfg, chi_tilde, &template, opts, rng)?;
            let noise = gen_noise_stream(cfg, opts, rng)?;
            let merged = merge(&signal, &noise)?;
            let (_, peak) = max_cross_correlation(&template, &merged, opts.resolution)?;
            Ok(EventRecord {
                count: peak,
                signal: merged,
                idler: None,
            })
        }
    }
}

/// Writes tag streams as two-column text: channel index (0 signal, 1 idler)
/// and integer picoseconds, globally time-ordered, preceded by span and
/// resolution header comments.
pub fn write_tag_file(path: &std::path::Path, streams: &[&TimeTagStream]) -> Result<()> {
    use std::io::Write;
    let first = streams
        .first()
        .ok_or_else(|| Error::InvalidArgument("no streams to write".into()))?;
    if streams
        .iter()
        .any(|s| s.span != first.span || s.resolution != first.resolution)
    {
        return Err(Error::InvalidArgument(
            "streams in one file share span and resolution".into(),
        ));
    }
    let span_ps = (first.span * 1e12).round() as u64;
    let res_ps = (first.resolution * 1e12).round() as u64;
    if res_ps == 0 || span_ps == 0 {
        return Err(Error::InvalidArgument(
            "spans and resolutions below one picosecond cannot be serialized".into(),
        ));
    }
    let mut rows: Vec<(u64, u8)> = Vec::new();
    for s in streams {
        let ch = match s.channel {
            Channel::SignalDetector => 0u8,
            Channel::IdlerDetector => 1u8,
        };
        for &t in &s.tags {
            rows.push((((t * 1e12).round() as u64).min(span_ps - 1), ch));
        }
    }
    rows.sort_unstable();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# span_ps={span_ps}")?;
    writeln!(out, "# resolution_ps={res_ps}")?;
    for (ps, ch) in rows {
        writeln!(out, "{ch} {ps}")?;
    }
    Ok(())
}

/// Reads a tag file written by [`write_tag_file`]; returns the signal stream
/// and, when idler rows are present, the idler stream.
pub fn read_tag_file(
    path: &std::path::Path,
) -> Result<(TimeTagStream, Option<TimeTagStream>)> {
    let text = std::fs::read_to_string(path)?;
    let mut span_ps: Option<u64> = None;
    let mut res_ps: Option<u64> = None;
    let mut signal = Vec::new();
    let mut idler = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("span_ps=") {
                span_ps = Some(parse_ps(v, lineno)?);
            } else if let Some(v) = rest.strip_prefix("resolution_ps=") {
                res_ps = Some(parse_ps(v, lineno)?);
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (ch, ps) = match (parts.next(), parts.next(), parts.next()) {
            (Some(ch), Some(ps), None) => (ch, ps),
            _ => {
                return Err(Error::Format(format!(
                    "line {}: expected `channel time_ps`",
                    lineno + 1
                )))
            }
        };
        let t = parse_ps(ps, lineno)? as f64 * 1e-12;
        match ch {
            "0" => signal.push(t),
            "1" => idler.push(t),
            other => {
                return Err(Error::Format(format!(
                    "line {}: unknown channel {other}",
                    lineno + 1
                )))
            }
        }
    }
    let span = span_ps.ok_or_else(|| Error::Format("missing span_ps header".into()))? as f64
        * 1e-12;
    let resolution =
        res_ps.ok_or_else(|| Error::Format("missing resolution_ps header".into()))? as f64
            * 1e-12;
    let sig = TimeTagStream::new(Channel::SignalDetector, signal, resolution, span)?;
    let idl = if idler.is_empty() {
        None
    } else {
        Some(TimeTagStream::new(
            Channel::IdlerDetector,
            idler,
            resolution,
            span,
        )?)
    };
    Ok((sig, idl))
}

fn parse_ps(v: &str, lineno: usize) -> Result<u64> {
    v.parse()
        .map_err(|_| Error::Format(format!("line {}: bad integer {v}", lineno + 1)))
}

fn check_overlap(chi_tilde: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&chi_tilde) {
        return Err(Error::InvalidArgument(format!(
            "overlap {chi_tilde} outside [0, 1]"
        )));
    }
    Ok(())
}
