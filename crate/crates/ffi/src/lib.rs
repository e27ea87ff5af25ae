//! C interface to the hawkfeed model.
//!
//! Objects cross the boundary as opaque handles created by `*_load`,
//! `hf_fit` or `hf_simulate` and released with the matching `*_free`.
//! Every fallible call returns an [`HfStatus`]; on failure the message is
//! available from [`hf_last_error`] until the next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hawkfeed::features::store::population_of;
use hawkfeed::fit::{fit, FitConfig};
use hawkfeed::io::{self, ModelFile};
use hawkfeed::likelihood::Zeta;
use hawkfeed::rank_eval::{candidates, CandidatePolicy, IntensityRanker, Ranker};
use hawkfeed::simulate::{simulate_corpus, SimConfig};
use hawkfeed::{model, Cascade, Error, FeatureStore};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    Precondition = 6,
    Estimation = 7,
    Usage = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// A loaded or simulated set of cascades.
pub struct HfCorpus(Vec<Cascade>);

pub struct HfFeatures(FeatureStore);

pub struct HfModel(ModelFile);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HfStatus {
    match e {
        Error::Usage(_) => HfStatus::Usage,
        Error::Io { .. } => HfStatus::Io,
        Error::Parse { .. } => HfStatus::Parse,
        Error::Config(_) => HfStatus::Config,
        Error::Precondition(_) => HfStatus::Precondition,
        Error::Estimation(_) => HfStatus::Estimation,
    }
}

struct Fail(HfStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HfStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            HfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(HfStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            HfStatus::InvalidString,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(HfStatus::NullPointer, format!("{what} is null")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(HfStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next hawkfeed call on the same thread.
#[no_mangle]
pub extern "C" fn hf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hf_corpus_load(path: *const c_char, out: *mut *mut HfCorpus) -> HfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let cs = io::read_corpus(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(HfCorpus(cs)));
        Ok(())
    })
}

/// # Safety
/// `corpus` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hf_corpus_save(corpus: *const HfCorpus, path: *const c_char) -> HfStatus {
    guard(|| {
        let c = ref_arg(corpus, "corpus")?;
        io::write_corpus(Path::new(str_arg(path, "path")?), &c.0)?;
        Ok(())
    })
}

/// Number of cascades, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn hf_corpus_len(corpus: *const HfCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `corpus` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hf_corpus_free(corpus: *mut HfCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_features_load(
    path: *const c_char,
    out: *mut *mut HfFeatures,
) -> HfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let s = io::load_features(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(HfFeatures(s)));
        Ok(())
    })
}

/// Fills empty content vectors from event text using the store's lexicon.
///
/// # Safety
/// Both handles must come from this library.
#[no_mangle]
pub unsafe extern "C" fn hf_features_annotate(
    features: *const HfFeatures,
    corpus: *mut HfCorpus,
) -> HfStatus {
    guard(|| {
        let f = ref_arg(features, "features")?;
        let c = corpus
            .as_mut()
            .ok_or_else(|| Fail(HfStatus::NullPointer, "corpus is null".into()))?;
        f.0.annotate(&mut c.0)?;
        Ok(())
    })
}

/// # Safety
/// `features` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hf_features_free(features: *mut HfFeatures) {
    if !features.is_null() {
        drop(Box::from_raw(features));
    }
}

/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_model_load(path: *const c_char, out: *mut *mut HfModel) -> HfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = io::load_model(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(HfModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hf_model_save(model: *const HfModel, path: *const c_char) -> HfStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        io::save_model(Path::new(str_arg(path, "path")?), &m.0)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hf_model_free(model: *mut HfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Fits a model with default settings and a uniform L1 penalty `zeta`.
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_fit(
    corpus: *const HfCorpus,
    features: *const HfFeatures,
    zeta: f64,
    out: *mut *mut HfModel,
) -> HfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let c = ref_arg(corpus, "corpus")?;
        let f = ref_arg(features, "features")?;
        let config = FitConfig {
            zeta: Zeta::uniform(zeta),
            ..FitConfig::default()
        };
        let users = if f.0.population().is_empty() {
            population_of(&c.0)
        } else {
            f.0.population().to_vec()
        };
        let result = fit(&c.0, &f.0, &users, &config)?;
        *out = Box::into_raw(Box::new(HfModel(ModelFile::from_fit(&result))));
        Ok(())
    })
}

/// Intensity of `user` on cascade `index` at global time `t`.
///
/// # Safety
/// Handles must come from this library; `user` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hf_intensity(
    model: *const HfModel,
    features: *const HfFeatures,
    corpus: *const HfCorpus,
    index: usize,
    user: *const c_char,
    t: f64,
    out: *mut f64,
) -> HfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = ref_arg(model, "model")?;
        let f = ref_arg(features, "features")?;
        let c = ref_arg(corpus, "corpus")?;
        let user = str_arg(user, "user")?;
        let cascade = c.0.get(index).ok_or_else(|| {
            Fail(
                HfStatus::Precondition,
                format!("cascade index {index} out of range"),
            )
        })?;
        *out = model::intensity(user, cascade, cascade.to_local(t), &m.0.params, &f.0)?;
        Ok(())
    })
}

/// Orders the cascades open at global time `t` for `user`, most intense first.
///
/// Writes up to `capacity` cascade indices to `order` and the full count to
/// `len`. When `capacity` is too small nothing is written except `len` and
/// the call returns `BufferTooSmall`.
///
/// # Safety
/// Handles must come from this library; `order` must hold `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn hf_prioritize(
    model: *const HfModel,
    features: *const HfFeatures,
    corpus: *const HfCorpus,
    user: *const c_char,
    t: f64,
    order: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> HfStatus {
    guard(|| {
        out_arg(len, "len")?;
        let m = ref_arg(model, "model")?;
        let f = ref_arg(features, "features")?;
        let c = ref_arg(corpus, "corpus")?;
        let user = str_arg(user, "user")?;
        let cands = candidates(&c.0, t, CandidatePolicy::Open);
        let mut ranker = IntensityRanker::new("ffi", m.0.params.clone(), f.0.clone());
        let ranked = ranker.rank(user, t, &c.0, &cands)?;
        *len = ranked.len();
        if ranked.len() > capacity {
            return Err(Fail(
                HfStatus::BufferTooSmall,
                format!("{} cascades do not fit in {capacity} slots", ranked.len()),
            ));
        }
        if !ranked.is_empty() {
            out_arg(order, "order")?;
            ptr::copy_nonoverlapping(ranked.as_ptr(), order, ranked.len());
        }
        Ok(())
    })
}

/// Simulates `n` cascades over the store's population, one every `horizon`
/// minutes, each observed for `horizon` minutes.
///
/// # Safety
/// Handles must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hf_simulate(
    model: *const HfModel,
    features: *const HfFeatures,
    n: usize,
    horizon: f64,
    seed: u64,
    out: *mut *mut HfCorpus,
) -> HfStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = ref_arg(model, "model")?;
        let f = ref_arg(features, "features")?;
        let config = SimConfig {
            users: f.0.population().to_vec(),
            store: f.0.clone(),
            params: m.0.params.clone(),
            horizon,
            event_cap: 10_000,
            seed,
            post_interval: horizon,
            group: "sim".to_string(),
        };
        let cs = simulate_corpus(&config, n)?;
        *out = Box::into_raw(Box::new(HfCorpus(cs)));
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
