//! C ABI over the core library. Every function returns a `VlmStatus`;
//! outputs go through caller-supplied pointers or opaque handles. On any
//! non-Ok status a thread-local message describing the failure is available
//! via `vlmprep_last_error`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;

use vlmprep::docformat;
use vlmprep::geometry::{llm_token_count, smart_resize, vit_token_count};
use vlmprep::grounding::{iou, miou, BBox, TimeSpan};
use vlmprep::packing::{pack, PackedBatch};
use vlmprep::rope::mrope_ids_image;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("sanitized message");
    });
}

/// Outcome of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    BufferTooSmall = 4,
    OperationFailed = 5,
}

/// Resize geometry for one image, mirroring the core patch-grid record.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VlmPatchGrid {
    pub orig_h: usize,
    pub orig_w: usize,
    pub resized_h: usize,
    pub resized_w: usize,
    pub grid_h: usize,
    pub grid_w: usize,
    pub merged_h: usize,
    pub merged_w: usize,
    pub vit_tokens: usize,
    pub llm_tokens: usize,
}

/// Opaque packed-batch handle produced by `vlmprep_pack_new`.
pub struct VlmPack {
    batch: PackedBatch,
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread; the caller
/// must not free it.
#[no_mangle]
pub extern "C" fn vlmprep_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Rounds an image to the patch geometry that fits the token budget.
///
/// # Safety
/// `out` must point to a writable `VlmPatchGrid`.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_smart_resize(
    height: usize,
    width: usize,
    min_tokens: usize,
    max_tokens: usize,
    out: *mut VlmPatchGrid,
) -> VlmStatus {
    if out.is_null() {
        set_error("out pointer is null".into());
        return VlmStatus::NullPointer;
    }
    match smart_resize(height, width, min_tokens, max_tokens) {
        Ok(grid) => {
            let llm = match llm_token_count(&grid) {
                Ok(n) => n,
                Err(e) => {
                    set_error(e.to_string());
                    return VlmStatus::OperationFailed;
                }
            };
            *out = VlmPatchGrid {
                orig_h: grid.orig_h,
                orig_w: grid.orig_w,
                resized_h: grid.resized_h,
                resized_w: grid.resized_w,
                grid_h: grid.grid_h,
                grid_w: grid.grid_w,
                merged_h: grid.merged_h,
                merged_w: grid.merged_w,
                vit_tokens: vit_token_count(&grid),
                llm_tokens: llm,
            };
            VlmStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            VlmStatus::InvalidArgument
        }
    }
}

/// Intersection-over-union of two boxes given as corner coordinates.
///
/// # Safety
/// `out` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_box_iou(
    ax1: i64,
    ay1: i64,
    ax2: i64,
    ay2: i64,
    bx1: i64,
    by1: i64,
    bx2: i64,
    by2: i64,
    out: *mut f64,
) -> VlmStatus {
    if out.is_null() {
        set_error("out pointer is null".into());
        return VlmStatus::NullPointer;
    }
    let a = match BBox::new(ax1, ay1, ax2, ay2, "") {
        Ok(b) => b,
        Err(e) => {
            set_error(e.to_string());
            return VlmStatus::InvalidArgument;
        }
    };
    let b = match BBox::new(bx1, by1, bx2, by2, "") {
        Ok(b) => b,
        Err(e) => {
            set_error(e.to_string());
            return VlmStatus::InvalidArgument;
        }
    };
    *out = iou(&a, &b);
    VlmStatus::Ok
}

/// Mean temporal IoU over `n` span pairs. Each spans array holds `2 * n`
/// doubles laid out start,end,start,end,...
///
/// # Safety
/// `pred` and `gold` must each point to `2 * n` readable doubles and `out`
/// to a writable double.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_temporal_miou(
    pred: *const f64,
    gold: *const f64,
    n: usize,
    out: *mut f64,
) -> VlmStatus {
    if pred.is_null() || gold.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return VlmStatus::NullPointer;
    }
    let pred = std::slice::from_raw_parts(pred, 2 * n);
    let gold = std::slice::from_raw_parts(gold, 2 * n);
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let p = match TimeSpan::new(pred[2 * i], pred[2 * i + 1]) {
            Ok(s) => s,
            Err(e) => {
                set_error(format!("pred span {i}: {e}"));
                return VlmStatus::InvalidArgument;
            }
        };
        let g = match TimeSpan::new(gold[2 * i], gold[2 * i + 1]) {
            Ok(s) => s,
            Err(e) => {
                set_error(format!("gold span {i}: {e}"));
                return VlmStatus::InvalidArgument;
            }
        };
        pairs.push((p, g));
    }
    match miou(&pairs) {
        Ok(v) => {
            *out = v;
            VlmStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            VlmStatus::InvalidArgument
        }
    }
}

/// Packs `n` sample lengths into bins of `capacity` and returns an opaque
/// handle, or null on failure (see `vlmprep_last_error`). Free with
/// `vlmprep_pack_free`.
///
/// # Safety
/// `lengths` must point to `n` readable `size_t` values.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_pack_new(
    lengths: *const usize,
    n: usize,
    capacity: usize,
) -> *mut VlmPack {
    if lengths.is_null() && n > 0 {
        set_error("lengths pointer is null".into());
        return std::ptr::null_mut();
    }
    let lengths = if n == 0 {
        &[]
    } else {
        std::slice::from_raw_parts(lengths, n)
    };
    match pack(lengths, capacity) {
        Ok(batch) => Box::into_raw(Box::new(VlmPack { batch })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Number of bins in a packed batch; 0 for a null handle.
#[no_mangle]
pub extern "C" fn vlmprep_pack_bin_count(pack: *const VlmPack) -> usize {
    if pack.is_null() {
        return 0;
    }
    unsafe { (&(*pack).batch.bins).len() }
}

/// Number of samples in one bin; 0 for a null handle or out-of-range bin.
#[no_mangle]
pub extern "C" fn vlmprep_pack_bin_size(pack: *const VlmPack, bin: usize) -> usize {
    if pack.is_null() {
        return 0;
    }
    unsafe { (&(*pack).batch.bins).get(bin).map_or(0, |b| b.samples.len()) }
}

/// Copies one bin's original sample indices into `out`.
///
/// # Safety
/// `out` must point to `out_len` writable `size_t` values.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_pack_bin_samples(
    pack: *const VlmPack,
    bin: usize,
    out: *mut usize,
    out_len: usize,
) -> VlmStatus {
    if pack.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return VlmStatus::NullPointer;
    }
    let Some(b) = (&(*pack).batch.bins).get(bin) else {
        set_error(format!("bin index {bin} out of range"));
        return VlmStatus::InvalidArgument;
    };
    if out_len < b.samples.len() {
        set_error(format!(
            "buffer holds {out_len} entries, bin has {}",
            b.samples.len()
        ));
        return VlmStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(b.samples.as_ptr(), out, b.samples.len());
    VlmStatus::Ok
}

/// Releases a packed-batch handle. Null is a no-op.
///
/// # Safety
/// `pack` must be a handle from `vlmprep_pack_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_pack_free(pack: *mut VlmPack) {
    if !pack.is_null() {
        drop(Box::from_raw(pack));
    }
}

/// Number of position-id entries (3 per token) an image span needs.
#[no_mangle]
pub extern "C" fn vlmprep_mrope_image_id_count(merged_h: usize, merged_w: usize) -> usize {
    3 * merged_h * merged_w
}

/// Writes the (t, h, w) position-id triples for an image span into `out`
/// (t0,h0,w0,t1,h1,w1,...) and the id the following span starts at into
/// `next_start`.
///
/// # Safety
/// `out` must point to `out_len` writable `uint64_t` values and
/// `next_start` to a writable `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_mrope_image_ids(
    start: u64,
    merged_h: usize,
    merged_w: usize,
    out: *mut u64,
    out_len: usize,
    next_start: *mut u64,
) -> VlmStatus {
    if out.is_null() || next_start.is_null() {
        set_error("null pointer argument".into());
        return VlmStatus::NullPointer;
    }
    let needed = vlmprep_mrope_image_id_count(merged_h, merged_w);
    if out_len < needed {
        set_error(format!("buffer holds {out_len} entries, span needs {needed}"));
        return VlmStatus::BufferTooSmall;
    }
    let ids = mrope_ids_image(start, merged_h, merged_w);
    let out = std::slice::from_raw_parts_mut(out, needed);
    for (slot, (t, h, w)) in out.chunks_exact_mut(3).zip(ids.triples) {
        slot[0] = t;
        slot[1] = h;
        slot[2] = w;
    }
    *next_start = ids.next_start;
    VlmStatus::Ok
}

/// Parses a QwenVL HTML document and returns its layout as a JSON string,
/// or null on failure (see `vlmprep_last_error`). Free the result with
/// `vlmprep_string_free`.
///
/// # Safety
/// `html` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_doc_parse_to_json(html: *const c_char) -> *mut c_char {
    if html.is_null() {
        set_error("html pointer is null".into());
        return std::ptr::null_mut();
    }
    let text = match CStr::from_ptr(html).to_str() {
        Ok(t) => t,
        Err(e) => {
            set_error(e.to_string());
            return std::ptr::null_mut();
        }
    };
    match docformat::parse_qwenvl_html(text) {
        Ok(tree) => {
            let json = docformat::to_layout_json(&tree);
            CString::new(json)
                .map(CString::into_raw)
                .unwrap_or(std::ptr::null_mut())
        }
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vlmprep_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
