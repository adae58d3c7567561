//! Ingestion, panel assembly, window features, sampling, and synthetic data.

mod features;
mod panel;
mod records;
mod sampler;
mod synthetic;

pub use features::{
    build_features, decode_start_bounds, LagConfig, WindowFeatures, DECODER_CHANNELS,
    ENCODER_CHANNELS,
};
pub use panel::{assemble_panel, DateRange, Panel, SeriesKey, HORIZON};
pub use records::{
    load_items, load_records, load_submission, load_test_records, write_items, write_records,
    write_submission, write_test_records, ItemMeta, ItemTable, RawRecord, SubmissionRow, TestRecord,
    ITEMS_HEADER, SUBMISSION_HEADER, TEST_HEADER, TRAIN_HEADER,
};
pub use sampler::{
    holdout_split, sample_batch, training_start_range, Holdout, WindowBatch, DEFAULT_BATCH_SIZE,
};
pub use synthetic::{
    generate_synthetic, weekly_factor, yearly_factor, SeriesComponents, SyntheticConfig,
    SyntheticData,
};
