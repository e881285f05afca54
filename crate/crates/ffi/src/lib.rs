//! C interface to the persona-dialogue scorers, gap metrics and prompt
//! renderer.
//!
//! Every fallible function returns a [`PdStatus`]; on anything other than
//! `PD_OK` the thread's last error message is available from
//! [`pd_last_error`]. Objects are opaque handles released with their
//! matching `*_free`. Strings returned through `char **` out-parameters are
//! owned by the caller and released with [`pd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::path::Path;
use std::ptr;

use persona_dialogue::cli::parse_variants;
use persona_dialogue::features::PersonaFeatures;
use persona_dialogue::lexica::{
    score_category, score_weighted, tokenize, topic_distribution, CategoryDictionary, TopicLexicon, WeightedLexicon,
};
use persona_dialogue::metrics::{
    scalar_average_error, scalar_error_of_average, scalar_error_of_dispersion, vector_average_error,
    vector_error_of_average, vector_error_of_dispersion, MetricError, SummaryStats, VectorSummaryStats,
};
use persona_dialogue::prompts::{registry, PromptConfig, PromptRegistry};

#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// A file could not be read or parsed.
    Load = 3,
    /// An argument was well formed but not acceptable (unknown category,
    /// wrong buffer length, bad persona JSON, unknown variant).
    InvalidArgument = 4,
    /// A metric is undefined for the inputs (zero reference, no samples).
    Undefined = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn pd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

struct Failure(PdStatus, String);

type Outcome = Result<(), Failure>;

fn fail<T>(status: PdStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

fn guard(f: impl FnOnce() -> Outcome + UnwindSafe) -> PdStatus {
    match catch_unwind(f) {
        Ok(Ok(())) => PdStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PdStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(PdStatus::NullArgument, format!("{what} is NULL"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(PdStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn check_out<T>(p: *mut T, what: &str) -> Outcome {
    if p.is_null() {
        return fail(PdStatus::NullArgument, format!("{what} is NULL"));
    }
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .map_or_else(|| fail(PdStatus::NullArgument, format!("{what} is NULL")), Ok)
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(PdStatus::NullArgument, format!("{what} is NULL"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .or_else(|_| fail(PdStatus::InvalidArgument, "result contains a NUL byte"))
}

fn metric(e: MetricError) -> Failure {
    Failure(PdStatus::Undefined, e.to_string())
}

// ---------------------------------------------------------------------------
// Lexica

/// Weighted lexicon (term to weight plus intercept).
pub struct PdWeightedLexicon(WeightedLexicon);

/// Category dictionary in LIWC `.dic` format.
pub struct PdDictionary(CategoryDictionary);

/// Topic lexicon (term, topic, weight).
pub struct PdTopicLexicon(TopicLexicon);

/// Loads a weighted lexicon CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_weighted_lexicon_load(path: *const c_char, out: *mut *mut PdWeightedLexicon) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let path = text(path, "path")?;
        let lex = WeightedLexicon::from_csv_path("lexicon", Path::new(path))
            .or_else(|e| fail(PdStatus::Load, e.to_string()))?;
        *out = Box::into_raw(Box::new(PdWeightedLexicon(lex)));
        Ok(())
    })
}

/// # Safety
/// `lex` must come from `pd_weighted_lexicon_load` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn pd_weighted_lexicon_free(lex: *mut PdWeightedLexicon) {
    if !lex.is_null() {
        drop(Box::from_raw(lex));
    }
}

/// Intercept plus the relative-frequency-weighted sum of term weights.
///
/// # Safety
/// `lex` must be a live handle, `text` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_weighted_lexicon_score(
    lex: *const PdWeightedLexicon,
    text_in: *const c_char,
    out: *mut f64,
) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let lex = handle(lex, "lexicon")?;
        *out = score_weighted(&tokenize(text(text_in, "text")?), &lex.0);
        Ok(())
    })
}

/// Loads a `.dic` category dictionary.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_dictionary_load(path: *const c_char, out: *mut *mut PdDictionary) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let path = text(path, "path")?;
        let dict = CategoryDictionary::from_dic_path(Path::new(path)).or_else(|e| fail(PdStatus::Load, e.to_string()))?;
        *out = Box::into_raw(Box::new(PdDictionary(dict)));
        Ok(())
    })
}

/// # Safety
/// `dict` must come from `pd_dictionary_load` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn pd_dictionary_free(dict: *mut PdDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// Share of tokens in `category`; 0 for a text without tokens.
///
/// # Safety
/// `dict` must be a live handle, strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pd_dictionary_score(
    dict: *const PdDictionary,
    text_in: *const c_char,
    category: *const c_char,
    out: *mut f64,
) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let dict = handle(dict, "dictionary")?;
        let category = text(category, "category")?;
        *out = score_category(&tokenize(text(text_in, "text")?), &dict.0, category)
            .or_else(|e| fail(PdStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}

/// Loads a topic lexicon CSV. `topic_count` of 0 infers it from the file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_topic_lexicon_load(
    path: *const c_char,
    topic_count: usize,
    out: *mut *mut PdTopicLexicon,
) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let path = text(path, "path")?;
        let count = (topic_count > 0).then_some(topic_count);
        let lex = TopicLexicon::from_csv_path(Path::new(path), count).or_else(|e| fail(PdStatus::Load, e.to_string()))?;
        *out = Box::into_raw(Box::new(PdTopicLexicon(lex)));
        Ok(())
    })
}

/// # Safety
/// `lex` must come from `pd_topic_lexicon_load` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn pd_topic_lexicon_free(lex: *mut PdTopicLexicon) {
    if !lex.is_null() {
        drop(Box::from_raw(lex));
    }
}

/// Number of topics, or 0 for a NULL handle.
///
/// # Safety
/// `lex` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn pd_topic_lexicon_topic_count(lex: *const PdTopicLexicon) -> usize {
    lex.as_ref().map_or(0, |l| l.0.topic_count())
}

/// Writes the topic distribution of `text` into `out`, which must hold
/// exactly `pd_topic_lexicon_topic_count` doubles.
///
/// # Safety
/// `lex` must be a live handle, `text` NUL-terminated, `out` writable for
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_topic_distribution(
    lex: *const PdTopicLexicon,
    text_in: *const c_char,
    out: *mut f64,
    len: usize,
) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let lex = handle(lex, "topic lexicon")?;
        let k = lex.0.topic_count();
        if len != k {
            return fail(PdStatus::InvalidArgument, format!("buffer holds {len} values, lexicon has {k} topics"));
        }
        let v = topic_distribution(&tokenize(text(text_in, "text")?), &lex.0);
        std::slice::from_raw_parts_mut(out, k).copy_from_slice(&v);
        Ok(())
    })
}

/// Token count of one turn.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_turn_length(text_in: *const c_char, out: *mut usize) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = tokenize(text(text_in, "text")?).len();
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Metrics

/// The three human-vs-generated gap metrics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdErrors {
    pub average_error: f64,
    pub error_of_average: f64,
    pub error_of_dispersion: f64,
    /// Pairs left out of `average_error` because the human value was zero.
    pub excluded_zero_reference: usize,
}

/// Gap metrics for `n` paired scalar values.
///
/// # Safety
/// `human` and `generated` must each hold `n` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pd_scalar_errors(
    human: *const f64,
    generated: *const f64,
    n: usize,
    out: *mut PdErrors,
) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let c = slice(human, n, "human")?;
        let l = slice(generated, n, "generated")?;
        let pairs: Vec<(f64, f64)> = c.iter().copied().zip(l.iter().copied()).collect();
        let avg = scalar_average_error(&pairs).map_err(metric)?;
        let sc = SummaryStats::from_values(c).map_err(metric)?;
        let sl = SummaryStats::from_values(l).map_err(metric)?;
        *out = PdErrors {
            average_error: avg.value,
            error_of_average: scalar_error_of_average(&sc, &sl).map_err(metric)?,
            error_of_dispersion: scalar_error_of_dispersion(&sc, &sl).map_err(metric)?,
            excluded_zero_reference: avg.excluded_zero_reference,
        };
        Ok(())
    })
}

/// Error of average and error of dispersion from summary statistics alone
/// (population standard deviations).
///
/// # Safety
/// Both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_errors_from_stats(
    human_mean: f64,
    generated_mean: f64,
    human_std: f64,
    generated_std: f64,
    error_of_average: *mut f64,
    error_of_dispersion: *mut f64,
) -> PdStatus {
    guard(|| {
        check_out(error_of_average, "error_of_average")?;
        check_out(error_of_dispersion, "error_of_dispersion")?;
        let c = SummaryStats {
            mean: human_mean,
            std: human_std,
            n: 1,
        };
        let l = SummaryStats {
            mean: generated_mean,
            std: generated_std,
            n: 1,
        };
        *error_of_average = scalar_error_of_average(&c, &l).map_err(metric)?;
        *error_of_dispersion = scalar_error_of_dispersion(&c, &l).map_err(metric)?;
        Ok(())
    })
}

/// Gap metrics for `n` paired vectors of dimension `dim`, stored row-major.
///
/// # Safety
/// `human` and `generated` must each hold `n * dim` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pd_vector_errors(
    human: *const f64,
    generated: *const f64,
    n: usize,
    dim: usize,
    out: *mut PdErrors,
) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let total = n
            .checked_mul(dim)
            .map_or_else(|| fail(PdStatus::InvalidArgument, "n * dim overflows"), Ok)?;
        if dim == 0 {
            return fail(PdStatus::InvalidArgument, "dimension is 0");
        }
        let rows = |s: &[f64]| -> Vec<Vec<f64>> { s.chunks(dim).map(<[f64]>::to_vec).collect() };
        let c = rows(slice(human, total, "human")?);
        let l = rows(slice(generated, total, "generated")?);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = c.iter().cloned().zip(l.iter().cloned()).collect();
        let avg = vector_average_error(&pairs).map_err(metric)?;
        let sc = VectorSummaryStats::from_vectors(&c).map_err(metric)?;
        let sl = VectorSummaryStats::from_vectors(&l).map_err(metric)?;
        *out = PdErrors {
            average_error: avg.value,
            error_of_average: vector_error_of_average(&sc, &sl).map_err(metric)?,
            error_of_dispersion: vector_error_of_dispersion(&sc, &sl).map_err(metric)?,
            excluded_zero_reference: avg.excluded_zero_reference,
        };
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Prompts

/// Prompt axes and their variants.
pub struct PdPromptRegistry(PromptRegistry);

/// The shipped registry.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_prompt_registry_default(out: *mut *mut PdPromptRegistry) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        *out = Box::into_raw(Box::new(PdPromptRegistry(registry())));
        Ok(())
    })
}

/// Loads a prompt config (TOML or JSON).
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pd_prompt_registry_load(path: *const c_char, out: *mut *mut PdPromptRegistry) -> PdStatus {
    guard(|| {
        check_out(out, "out")?;
        let path = text(path, "path")?;
        let reg = PromptConfig::from_path(Path::new(path))
            .and_then(|c| c.build())
            .or_else(|e| fail(PdStatus::Load, e.to_string()))?;
        *out = Box::into_raw(Box::new(PdPromptRegistry(reg)));
        Ok(())
    })
}

/// # Safety
/// `reg` must come from a `pd_prompt_registry_*` constructor or be NULL.
#[no_mangle]
pub unsafe extern "C" fn pd_prompt_registry_free(reg: *mut PdPromptRegistry) {
    if !reg.is_null() {
        drop(Box::from_raw(reg));
    }
}

/// Renders the system prompt and opening message for one persona.
/// `persona_json` is an object with `speaker_id`, `age`, `gender`
/// (`"male"`/`"female"`), `affect_phrase`, `topic_phrase` and
/// `source_conversation_id`. `variants` is `best`, `baseline` or
/// `axis=id;...` applied to the baseline.
///
/// # Safety
/// `reg` must be a live handle, strings NUL-terminated and both out-pointers
/// writable. The returned strings must be released with `pd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn pd_prompt_render(
    reg: *const PdPromptRegistry,
    persona_json: *const c_char,
    variants: *const c_char,
    system_out: *mut *mut c_char,
    opening_out: *mut *mut c_char,
) -> PdStatus {
    guard(|| {
        check_out(system_out, "system_out")?;
        check_out(opening_out, "opening_out")?;
        let reg = handle(reg, "registry")?;
        let persona: PersonaFeatures = serde_json::from_str(text(persona_json, "persona_json")?)
            .or_else(|e| fail(PdStatus::InvalidArgument, format!("persona: {e}")))?;
        let variants = parse_variants(text(variants, "variants")?, &reg.0)
            .or_else(|e| fail(PdStatus::InvalidArgument, e))?;
        let rendered = reg
            .0
            .render(&persona, &variants)
            .or_else(|e| fail(PdStatus::InvalidArgument, e.to_string()))?;
        let system = owned_string(rendered.system_text)?;
        let opening = match owned_string(rendered.opening_user_text) {
            Ok(s) => s,
            Err(e) => {
                pd_string_free(system);
                return Err(e);
            }
        };
        *system_out = system;
        *opening_out = opening;
        Ok(())
    })
}
