use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use cspq::{encode_dataset, synth_dataset};
use cspq_core::{encode_blocks, Codebook, EncoderVariant, ExecutionOrder, ExecutionPlan, PqParams, TrainConfig};

struct Counting;

static TRACKING: AtomicBool = AtomicBool::new(false);
static ALLOCS: AtomicUsize = AtomicUsize::new(0);
static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        if TRACKING.load(Ordering::Relaxed) {
            ALLOCS.fetch_add(1, Ordering::Relaxed);
            let live = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(live, Ordering::Relaxed);
        }
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        if TRACKING.load(Ordering::Relaxed) {
            // saturating: blocks allocated before tracking started may be freed now
            let _ = LIVE.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |x| Some(x.saturating_sub(layout.size())));
        }
        System.dealloc(ptr, layout)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

// Tests share the counters, so they take turns.
static SERIAL: Mutex<()> = Mutex::new(());

fn track<R>(f: impl FnOnce() -> R) -> (R, usize, usize) {
    ALLOCS.store(0, Ordering::SeqCst);
    LIVE.store(0, Ordering::SeqCst);
    PEAK.store(0, Ordering::SeqCst);
    TRACKING.store(true, Ordering::SeqCst);
    let r = f();
    TRACKING.store(false, Ordering::SeqCst);
    (r, ALLOCS.load(Ordering::SeqCst), PEAK.load(Ordering::SeqCst))
}

fn setup(n: usize) -> (cspq_core::VectorDataset, Vec<Codebook>) {
    let ds = synth_dataset(n, 32, 8, 4).unwrap();
    let params = PqParams::new(32, 4, 32).unwrap();
    let cbs = cspq::train_codebooks(&ds, &params, &TrainConfig::new(32).seed(2), 1)
        .unwrap()
        .into_iter()
        .map(|t| t.codebook)
        .collect();
    (ds, cbs)
}

#[test]
fn encode_blocks_does_not_allocate() {
    let _guard = SERIAL.lock().unwrap();
    let (ds, cbs) = setup(3000);
    let mut out = vec![0u16; ds.n() * cbs.len()];
    for variant in EncoderVariant::ALL {
        for order in [ExecutionOrder::ChunkMajor, ExecutionOrder::VectorMajor] {
            for w in [1, 3, 8, 16, 32] {
                let plan = ExecutionPlan { variant, order, w, block_size: 100, ..Default::default() };
                let (r, allocs, _) = track(|| encode_blocks(ds.as_slice(), &cbs, &plan, &mut out));
                r.unwrap();
                assert_eq!(allocs, 0, "{variant} {order:?} w={w}");
            }
        }
    }
}

#[test]
fn transient_memory_does_not_grow_with_n() {
    let _guard = SERIAL.lock().unwrap();
    let mut overheads = Vec::new();
    for n in [2_000, 20_000] {
        let (ds, cbs) = setup(n);
        let output_bytes = n * cbs.len() * 2;
        let plan = ExecutionPlan { workers: 4, block_size: 64, ..Default::default() };
        let (codes, _, peak) = track(|| encode_dataset(&ds, &cbs, &plan).unwrap());
        assert_eq!(codes.n(), n);
        assert!(peak >= output_bytes);
        overheads.push(peak - output_bytes);
    }
    // Thread stacks are mmapped outside the allocator; the rest is
    // per-worker bookkeeping that must not scale with the dataset.
    assert!(overheads[1] <= overheads[0] + 4096, "{overheads:?}");
    assert!(overheads[1] < 64 * 1024, "{overheads:?}");
}
