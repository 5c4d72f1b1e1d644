//! C ABI over the core library. Every function returns an
//! `ArmetricStatus`; on failure the thread-local message behind
//! `armetric_last_error` describes what went wrong. Strings returned
//! through out-parameters are owned by the caller and must be released
//! with `armetric_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::path::Path;

use armetric::corpus::{load_corpus, segment_sentences, Corpus, SchemaVersion};
use armetric::metrics::{
    balanced_accuracy, bootstrap_pvalue, f1_macro, pct_important, pct_none_important,
    pct_none_wrong, pct_wrong, BootstrapConfig, ConfusionCounts, PointLabel,
};
use armetric::textproc::{
    is_rewritten_with, normalize, normalized_edit_distance, word_edit_distance, CompareMode,
};

/// Result of every call in this interface.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ArmetricStatus {
    ArmetricOk = 0,
    ArmetricNullArgument = 1,
    ArmetricInvalidUtf8 = 2,
    ArmetricIoError = 3,
    ArmetricParseError = 4,
    ArmetricValidationError = 5,
    ArmetricComputeError = 6,
}

use ArmetricStatus::*;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn fail(status: ArmetricStatus, message: impl Into<String>) -> ArmetricStatus {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).unwrap();
    });
    status
}

/// Message for the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn armetric_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn armetric_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Releases a string returned through an out-parameter.
#[no_mangle]
pub unsafe extern "C" fn armetric_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, ArmetricStatus> {
    if ptr.is_null() {
        return Err(fail(ArmetricNullArgument, "null string argument"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail(ArmetricInvalidUtf8, format!("invalid utf-8: {e}")))
}

fn out_string(value: String, out: *mut *mut c_char) -> ArmetricStatus {
    let cstring = match CString::new(value) {
        Ok(c) => c,
        Err(e) => return fail(ArmetricComputeError, format!("interior nul: {e}")),
    };
    unsafe { *out = cstring.into_raw() };
    ArmetricOk
}

/// Writes the normalized token form of `text` (tokens joined by single
/// spaces) to `out`.
#[no_mangle]
pub unsafe extern "C" fn armetric_normalize(
    text: *const c_char,
    out: *mut *mut c_char,
) -> ArmetricStatus {
    if out.is_null() {
        return fail(ArmetricNullArgument, "null out pointer");
    }
    let text = match read_str(text) {
        Ok(t) => t,
        Err(status) => return status,
    };
    out_string(normalize(text).to_string(), out)
}

/// Word-level edit distance between the normalized forms of two texts.
#[no_mangle]
pub unsafe extern "C" fn armetric_word_edit_distance(
    a: *const c_char,
    b: *const c_char,
    out: *mut usize,
) -> ArmetricStatus {
    if out.is_null() {
        return fail(ArmetricNullArgument, "null out pointer");
    }
    let (a, b) = match (read_str(a), read_str(b)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    *out = word_edit_distance(&normalize(a), &normalize(b));
    ArmetricOk
}

/// Edit distance normalized by the longer token sequence, in [0, 1].
#[no_mangle]
pub unsafe extern "C" fn armetric_normalized_edit_distance(
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> ArmetricStatus {
    if out.is_null() {
        return fail(ArmetricNullArgument, "null out pointer");
    }
    let (a, b) = match (read_str(a), read_str(b)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    *out = normalized_edit_distance(&normalize(a), &normalize(b));
    ArmetricOk
}

/// Whether a rewrite differs from the original claim. `raw_compare`
/// nonzero compares trimmed raw text instead of normalized tokens.
/// `out` is 1 when the claim was rewritten, 0 when it was kept.
#[no_mangle]
pub unsafe extern "C" fn armetric_is_rewritten(
    original: *const c_char,
    rewrite: *const c_char,
    raw_compare: c_int,
    out: *mut c_int,
) -> ArmetricStatus {
    if out.is_null() {
        return fail(ArmetricNullArgument, "null out pointer");
    }
    let (original, rewrite) = match (read_str(original), read_str(rewrite)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(s), _) | (_, Err(s)) => return s,
    };
    let mode = if raw_compare != 0 {
        CompareMode::Raw
    } else {
        CompareMode::Normalized
    };
    *out = is_rewritten_with(original, rewrite, mode) as c_int;
    ArmetricOk
}

/// Opaque corpus handle.
pub struct ArmetricCorpus {
    corpus: Corpus,
}

/// Loads a corpus file. `schema` 0 is the native layout, 1 is the
/// storysumm layout. The handle must be released with
/// `armetric_corpus_free`. Validation problems fail the load.
#[no_mangle]
pub unsafe extern "C" fn armetric_corpus_load(
    path: *const c_char,
    schema: c_int,
    out: *mut *mut ArmetricCorpus,
) -> ArmetricStatus {
    if out.is_null() {
        return fail(ArmetricNullArgument, "null out pointer");
    }
    let path = match read_str(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let schema = match schema {
        0 => SchemaVersion::V1,
        1 => SchemaVersion::StorySumm,
        other => return fail(ArmetricParseError, format!("unknown schema code {other}")),
    };
    match load_corpus(Path::new(path), schema) {
        Ok(corpus) => {
            *out = Box::into_raw(Box::new(ArmetricCorpus { corpus }));
            ArmetricOk
        }
        Err(e @ armetric::corpus::CorpusError::Io { .. }) => fail(ArmetricIoError, e.to_string()),
        Err(e @ armetric::corpus::CorpusError::Validation { .. }) => {
            fail(ArmetricValidationError, e.to_string())
        }
        Err(e) => fail(ArmetricParseError, e.to_string()),
    }
}

#[no_mangle]
pub unsafe extern "C" fn armetric_corpus_free(corpus: *mut ArmetricCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

unsafe fn corpus_count(
    corpus: *const ArmetricCorpus,
    out: *mut usize,
    count: impl Fn(&Corpus) -> usize,
) -> ArmetricStatus {
    if corpus.is_null() || out.is_null() {
        return fail(ArmetricNullArgument, "null argument");
    }
    *out = count(&(*corpus).corpus);
    ArmetricOk
}

#[no_mangle]
pub unsafe extern "C" fn armetric_corpus_story_count(
    corpus: *const ArmetricCorpus,
    out: *mut usize,
) -> ArmetricStatus {
    corpus_count(corpus, out, |c| c.stories.len())
}

#[no_mangle]
pub unsafe extern "C" fn armetric_corpus_summary_count(
    corpus: *const ArmetricCorpus,
    out: *mut usize,
) -> ArmetricStatus {
    corpus_count(corpus, out, |c| c.summaries.len())
}

#[no_mangle]
pub unsafe extern "C" fn armetric_corpus_claim_count(
    corpus: *const ArmetricCorpus,
    out: *mut usize,
) -> ArmetricStatus {
    corpus_count(corpus, out, |c| c.claim_count())
}

fn counts_from(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionCounts {
    ConfusionCounts {
        true_positive: tp as usize,
        false_positive: fp as usize,
        false_negative: fn_ as usize,
        true_negative: tn as usize,
    }
}

/// Balanced accuracy in percent from confusion counts. Fails when a
/// gold class is empty.
#[no_mangle]
pub unsafe extern "C" fn armetric_balanced_accuracy(
    true_positive: u64,
    false_positive: u64,
    false_negative: u64,
    true_negative: u64,
    out: *mut f64,
) -> ArmetricStatus {
    if out.is_null() {
        return fail(ArmetricNullArgument, "null out pointer");
    }
    match balanced_accuracy(&counts_from(true_positive, false_positive, false_negative, true_negative)) {
        Ok(v) => {
            *out = v;
            ArmetricOk
        }
        Err(e) => fail(ArmetricComputeError, e.to_string()),
    }
}

/// Macro-averaged F1 in [0, 1] from confusion counts.
#[no_mangle]
pub unsafe extern "C" fn armetric_f1_macro(
    true_positive: u64,
    false_positive: u64,
    false_negative: u64,
    true_negative: u64,
    out: *mut f64,
) -> ArmetricStatus {
    if out.is_null() {
        return fail(ArmetricNullArgument, "null out pointer");
    }
    match f1_macro(&counts_from(true_positive, false_positive, false_negative, true_negative)) {
        Ok(v) => {
            *out = v;
            ArmetricOk
        }
        Err(e) => fail(ArmetricComputeError, e.to_string()),
    }
}

/// Explanation quality metric selector for `armetric_explanation_metric`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum ArmetricExplanationMetric {
    ArmetricPctImportant = 0,
    ArmetricPctNoneImportant = 1,
    ArmetricPctWrong = 2,
    ArmetricPctNoneWrong = 3,
}

/// Computes one explanation quality metric. `labels` holds the point
/// labels of every explanation back to back (0 important, 1 neutral,
/// 2 wrong) and `lengths[i]` is the number of points in explanation
/// `i`.
#[no_mangle]
pub unsafe extern "C" fn armetric_explanation_metric(
    metric: ArmetricExplanationMetric,
    labels: *const u8,
    lengths: *const usize,
    explanation_count: usize,
    out: *mut f64,
) -> ArmetricStatus {
    if labels.is_null() || lengths.is_null() || out.is_null() {
        return fail(ArmetricNullArgument, "null argument");
    }
    let lengths = std::slice::from_raw_parts(lengths, explanation_count);
    let total: usize = lengths.iter().sum();
    let flat = std::slice::from_raw_parts(labels, total);
    let mut explanations = Vec::with_capacity(explanation_count);
    let mut offset = 0;
    for &len in lengths {
        let mut points = Vec::with_capacity(len);
        for &code in &flat[offset..offset + len] {
            points.push(match code {
                0 => PointLabel::Important,
                1 => PointLabel::Neutral,
                2 => PointLabel::Wrong,
                other => {
                    return fail(ArmetricParseError, format!("unknown point label code {other}"))
                }
            });
        }
        explanations.push(points);
        offset += len;
    }
    let result = match metric {
        ArmetricExplanationMetric::ArmetricPctImportant => pct_important(&explanations),
        ArmetricExplanationMetric::ArmetricPctNoneImportant => pct_none_important(&explanations),
        ArmetricExplanationMetric::ArmetricPctWrong => pct_wrong(&explanations),
        ArmetricExplanationMetric::ArmetricPctNoneWrong => pct_none_wrong(&explanations),
    };
    match result {
        Ok(v) => {
            *out = v;
            ArmetricOk
        }
        Err(e) => fail(ArmetricComputeError, e.to_string()),
    }
}

/// Two-sided bootstrap p-value for the difference in positive rate
/// between two binary outcome groups. Elements are 0 or 1.
#[no_mangle]
pub unsafe extern "C" fn armetric_bootstrap_pvalue(
    group_a: *const u8,
    group_a_len: usize,
    group_b: *const u8,
    group_b_len: usize,
    trials: u32,
    seed: u64,
    out: *mut f64,
) -> ArmetricStatus {
    if group_a.is_null() || group_b.is_null() || out.is_null() {
        return fail(ArmetricNullArgument, "null argument");
    }
    let a: Vec<bool> = std::slice::from_raw_parts(group_a, group_a_len)
        .iter()
        .map(|&x| x != 0)
        .collect();
    let b: Vec<bool> = std::slice::from_raw_parts(group_b, group_b_len)
        .iter()
        .map(|&x| x != 0)
        .collect();
    let config = BootstrapConfig {
        trials,
        seed,
        parallelism: 1,
    };
    match bootstrap_pvalue(&a, &b, &config) {
        Ok(result) => {
            *out = result.p_value;
            ArmetricOk
        }
        Err(e) => fail(ArmetricComputeError, e.to_string()),
    }
}

/// Opaque list of sentences from `armetric_segment`.
pub struct ArmetricSegments {
    sentences: Vec<CString>,
}

/// Splits text into sentences. The handle must be released with
/// `armetric_segments_free`.
#[no_mangle]
pub unsafe extern "C" fn armetric_segment(
    text: *const c_char,
    out: *mut *mut ArmetricSegments,
) -> ArmetricStatus {
    if out.is_null() {
        return fail(ArmetricNullArgument, "null out pointer");
    }
    let text = match read_str(text) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let sentences = segment_sentences(text)
        .into_iter()
        .map(|s| CString::new(s.replace('\0', " ")).unwrap())
        .collect();
    *out = Box::into_raw(Box::new(ArmetricSegments { sentences }));
    ArmetricOk
}

#[no_mangle]
pub unsafe extern "C" fn armetric_segments_len(
    segments: *const ArmetricSegments,
    out: *mut usize,
) -> ArmetricStatus {
    if segments.is_null() || out.is_null() {
        return fail(ArmetricNullArgument, "null argument");
    }
    *out = (&(*segments).sentences).len();
    ArmetricOk
}

/// Borrowed pointer to sentence `index`; valid while the handle lives.
/// Returns null when the index is out of range.
#[no_mangle]
pub unsafe extern "C" fn armetric_segments_get(
    segments: *const ArmetricSegments,
    index: usize,
) -> *const c_char {
    if segments.is_null() {
        return std::ptr::null();
    }
    match (&(*segments).sentences).get(index) {
        Some(s) => s.as_ptr(),
        None => std::ptr::null(),
    }
}

#[no_mangle]
pub unsafe extern "C" fn armetric_segments_free(segments: *mut ArmetricSegments) {
    if !segments.is_null() {
        drop(Box::from_raw(segments));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn version_is_non_empty() {
        let version = unsafe { CStr::from_ptr(armetric_version()) };
        assert!(!version.to_str().unwrap().is_empty());
    }

    #[test]
    fn normalize_round_trip() {
        let input = cstr("The ponies are running!");
        let mut out: *mut c_char = std::ptr::null_mut();
        let status = unsafe { armetric_normalize(input.as_ptr(), &mut out) };
        assert_eq!(status, ArmetricOk);
        let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
        unsafe { armetric_string_free(out) };
        assert_eq!(text, "the poni ar run");
    }

    #[test]
    fn null_arguments_report_errors() {
        let mut out: *mut c_char = std::ptr::null_mut();
        let status = unsafe { armetric_normalize(std::ptr::null(), &mut out) };
        assert_eq!(status, ArmetricNullArgument);
        let message = unsafe { CStr::from_ptr(armetric_last_error()) };
        assert!(message.to_str().unwrap().contains("null"));

        let input = cstr("x");
        assert_eq!(
            unsafe { armetric_normalize(input.as_ptr(), std::ptr::null_mut()) },
            ArmetricNullArgument
        );
    }

    #[test]
    fn distances_match_library_values() {
        let a = cstr("The ponies are running!");
        let b = cstr("A pony runs");
        let mut d = 0usize;
        assert_eq!(
            unsafe { armetric_word_edit_distance(a.as_ptr(), b.as_ptr(), &mut d) },
            ArmetricOk
        );
        assert_eq!(d, 2);
        let mut nd = 0.0f64;
        assert_eq!(
            unsafe { armetric_normalized_edit_distance(a.as_ptr(), b.as_ptr(), &mut nd) },
            ArmetricOk
        );
        assert!((nd - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rewritten_flag_respects_compare_mode() {
        let original = cstr("The dog barked at dawn.");
        let rewrite = cstr("The dogs barked at dawn!");
        let mut flag = -1;
        unsafe {
            armetric_is_rewritten(original.as_ptr(), rewrite.as_ptr(), 0, &mut flag);
        }
        assert_eq!(flag, 0);
        unsafe {
            armetric_is_rewritten(original.as_ptr(), rewrite.as_ptr(), 1, &mut flag);
        }
        assert_eq!(flag, 1);
    }

    #[test]
    fn corpus_handle_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.json");
        std::fs::write(
            &path,
            serde_json::json!({
                "schema_version": 1,
                "stories": [{"id": "st1", "text": "A thing happened."}],
                "summaries": [{
                    "id": "s1",
                    "story_id": "st1",
                    "writer": {"kind": "human", "name": "w"},
                    "claims": [{"id": "s1.0", "text": "A thing happened."}],
                }],
            })
            .to_string(),
        )
        .unwrap();
        let cpath = cstr(path.to_str().unwrap());
        let mut handle: *mut ArmetricCorpus = std::ptr::null_mut();
        assert_eq!(
            unsafe { armetric_corpus_load(cpath.as_ptr(), 0, &mut handle) },
            ArmetricOk
        );
        let mut n = 0usize;
        unsafe {
            assert_eq!(armetric_corpus_story_count(handle, &mut n), ArmetricOk);
            assert_eq!(n, 1);
            assert_eq!(armetric_corpus_summary_count(handle, &mut n), ArmetricOk);
            assert_eq!(n, 1);
            assert_eq!(armetric_corpus_claim_count(handle, &mut n), ArmetricOk);
            assert_eq!(n, 1);
            armetric_corpus_free(handle);
        }

        let missing = cstr("/nonexistent/corpus.json");
        let mut handle: *mut ArmetricCorpus = std::ptr::null_mut();
        assert_eq!(
            unsafe { armetric_corpus_load(missing.as_ptr(), 0, &mut handle) },
            ArmetricIoError
        );
    }

    #[test]
    fn scalar_metrics() {
        let mut v = 0.0f64;
        assert_eq!(
            unsafe { armetric_balanced_accuracy(4, 2, 1, 3, &mut v) },
            ArmetricOk
        );
        assert!((v - 70.0).abs() < 1e-9);
        assert_eq!(
            unsafe { armetric_balanced_accuracy(4, 0, 1, 0, &mut v) },
            ArmetricComputeError
        );

        let labels = [0u8, 0, 1, 2, 0];
        let lengths = [4usize, 1];
        assert_eq!(
            unsafe {
                armetric_explanation_metric(
                    ArmetricExplanationMetric::ArmetricPctImportant,
                    labels.as_ptr(),
                    lengths.as_ptr(),
                    2,
                    &mut v,
                )
            },
            ArmetricOk
        );
        assert!((v - 75.0).abs() < 1e-9);
    }

    #[test]
    fn bootstrap_through_ffi_is_deterministic() {
        let a = [1u8; 20];
        let b = {
            let mut b = [0u8; 20];
            b[..10].fill(1);
            b
        };
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        unsafe {
            assert_eq!(
                armetric_bootstrap_pvalue(a.as_ptr(), 20, b.as_ptr(), 20, 500, 7, &mut p1),
                ArmetricOk
            );
            assert_eq!(
                armetric_bootstrap_pvalue(a.as_ptr(), 20, b.as_ptr(), 20, 500, 7, &mut p2),
                ArmetricOk
            );
        }
        assert_eq!(p1, p2);
        assert!(p1 > 0.0 && p1 <= 1.0);
    }

    #[test]
    fn segments_round_trip() {
        let text = cstr("Dr. Smith arrived. He sat down.");
        let mut handle: *mut ArmetricSegments = std::ptr::null_mut();
        assert_eq!(unsafe { armetric_segment(text.as_ptr(), &mut handle) }, ArmetricOk);
        let mut len = 0usize;
        unsafe {
            assert_eq!(armetric_segments_len(handle, &mut len), ArmetricOk);
            assert_eq!(len, 2);
            let first = CStr::from_ptr(armetric_segments_get(handle, 0));
            assert_eq!(first.to_str().unwrap(), "Dr. Smith arrived.");
            assert!(armetric_segments_get(handle, 5).is_null());
            armetric_segments_free(handle);
        }
    }
}
