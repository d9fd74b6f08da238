//! Normalized data model and file I/O for swaps, transfers, native-bridge
//! links, prices, labels, and asset equivalence.
//!
//! Event files are JSON Lines (UTF-8, one record per line, lower_snake_case
//! fields, token amounts as decimal strings) with a first-line header record
//! `{"schema_version":1,"kind":"<swaps|transfers|native_links|truth|matches>"}`.
//! Side tables are CSV with a mandatory header row and a leading
//! `# schema_version: 1` comment line. Token amounts are exact decimals
//! end to end; USD conversion is the only lossy step.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Current on-disk schema version for every file format in this module.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: unsupported schema_version {found} (supported: {supported})")]
    SchemaVersion {
        path: String,
        found: u32,
        supported: u32,
    },
    #[error("{path}: expected kind {expected:?}, found {found:?}")]
    SchemaKind {
        path: String,
        expected: String,
        found: String,
    },
    #[error("invalid registry: {0}")]
    Registry(String),
    #[error("ambiguous endpoints in tx {tx_hash}: {message}")]
    AmbiguousEndpoints { tx_hash: String, message: String },
}

/// First line of every JSONL file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonlHeader {
    pub schema_version: u32,
    pub kind: String,
}

/// One normalized, per-transaction-aggregated swap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub chain: String,
    pub tx_hash: String,
    pub block: u64,
    /// Unix seconds.
    pub timestamp: i64,
    /// Transaction sender (EOA).
    pub originator: String,
    /// First contract called, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_contact: Option<String>,
    pub asset_in: String,
    pub asset_out: String,
    #[serde(with = "rust_decimal::serde::str")]
    pub amount_in: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub amount_out: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub gas_fee_native: Decimal,
    #[serde(with = "rust_decimal::serde::str")]
    pub coinbase_tip_native: Decimal,
    /// Address that received the swap output, when it differs from the
    /// originator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient: Option<String>,
}

impl SwapRecord {
    /// Key identifying the transaction across files.
    pub fn tx_key(&self) -> (String, String) {
        (self.chain.clone(), self.tx_hash.clone())
    }

    /// The address holding the swap output (explicit recipient, else the
    /// originator).
    pub fn output_recipient(&self) -> &str {
        self.recipient.as_deref().unwrap_or(&self.originator)
    }

    fn check_invariants(&self) -> Result<(), String> {
        if self.amount_in < Decimal::ZERO || self.amount_out < Decimal::ZERO {
            return Err("invariant violation: negative amount".into());
        }
        if self.gas_fee_native < Decimal::ZERO || self.coinbase_tip_native < Decimal::ZERO {
            return Err("invariant violation: negative fee".into());
        }
        Ok(())
    }
}

/// One ERC-20 style transfer event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub chain: String,
    pub tx_hash: String,
    pub log_index: u64,
    pub block: u64,
    pub timestamp: i64,
    pub token: String,
    pub from: String,
    pub to: String,
    #[serde(with = "rust_decimal::serde::str")]
    pub amount: Decimal,
}

impl TransferRecord {
    fn check_invariants(&self) -> Result<(), String> {
        if self.amount <= Decimal::ZERO {
            return Err("invariant violation: amount must be > 0".into());
        }
        Ok(())
    }
}

/// A native-bridge deposit linked across an L1/L2 pair through the bridge's
/// sequential message number. Direction is L1 to L2 only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativeBridgeLink {
    pub l1_tx: String,
    pub l2_tx: String,
    pub message_number: u64,
    pub token: String,
    #[serde(with = "rust_decimal::serde::str")]
    pub amount: Decimal,
    pub sender: String,
    pub recipient: String,
    pub l1_timestamp: i64,
    pub l2_timestamp: i64,
}

impl NativeBridgeLink {
    fn check_invariants(&self) -> Result<(), String> {
        if self.l2_timestamp < self.l1_timestamp {
            return Err("invariant violation: l2_timestamp < l1_timestamp".into());
        }
        if self.amount <= Decimal::ZERO {
            return Err("invariant violation: amount must be > 0".into());
        }
        Ok(())
    }
}

/// Flags attached to an equivalence class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct ClassFlags {
    pub is_stable: bool,
    pub is_native: bool,
}

/// Maps concrete per-chain assets to economic equivalence classes.
///
/// Lookups are total over known assets only; callers must count and report
/// unmapped assets rather than guess. The reserved asset id `"native"`
/// denotes a chain's gas token.
#[derive(Debug, Clone, Default)]
pub struct EquivalenceRegistry {
    assets: HashMap<(String, String), String>,
    classes: HashMap<String, ClassFlags>,
}

impl EquivalenceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers one asset. Flag conflicts for an existing class are errors.
    pub fn insert(
        &mut self,
        chain: &str,
        asset: &str,
        class: &str,
        flags: ClassFlags,
    ) -> Result<(), DataError> {
        if let Some(existing) = self.classes.get(class) {
            if *existing != flags {
                return Err(DataError::Registry(format!(
                    "conflicting flags for class {class}"
                )));
            }
        }
        self.classes.insert(class.to_string(), flags);
        self.assets
            .insert((chain.to_string(), asset.to_string()), class.to_string());
        Ok(())
    }

    pub fn class_of(&self, chain: &str, asset: &str) -> Option<&str> {
        self.assets
            .get(&(chain.to_string(), asset.to_string()))
            .map(String::as_str)
    }

    pub fn flags(&self, class: &str) -> Option<ClassFlags> {
        self.classes.get(class).copied()
    }

    /// Class of the chain's gas token, via the reserved `"native"` asset id.
    pub fn native_class(&self, chain: &str) -> Option<&str> {
        self.class_of(chain, "native")
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    /// Iterates `(chain, asset, class, flags)` in sorted order.
    pub fn iter_sorted(&self) -> Vec<(String, String, String, ClassFlags)> {
        let mut rows: Vec<_> = self
            .assets
            .iter()
            .map(|((chain, asset), class)| {
                (
                    chain.clone(),
                    asset.clone(),
                    class.clone(),
                    self.classes[class],
                )
            })
            .collect();
        rows.sort();
        rows
    }
}

/// Hourly USD prices per equivalence class. Lookups are exact-bucket only.
#[derive(Debug, Clone, Default)]
pub struct PriceTable {
    prices: HashMap<(String, i64), f64>,
}

impl PriceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, class: &str, hour: i64, usd: f64) -> Result<(), DataError> {
        if !(usd > 0.0 && usd.is_finite()) {
            return Err(DataError::Registry(format!(
                "price for {class}@{hour} must be > 0, got {usd}"
            )));
        }
        self.prices.insert((class.to_string(), hour), usd);
        Ok(())
    }

    /// Hour bucket of a unix timestamp.
    pub fn hour_bucket(timestamp: i64) -> i64 {
        timestamp.div_euclid(3600)
    }

    /// USD price of `class` at the timestamp's hour bucket, if known.
    pub fn lookup(&self, class: &str, timestamp: i64) -> Option<f64> {
        self.prices
            .get(&(class.to_string(), Self::hour_bucket(timestamp)))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn iter_sorted(&self) -> Vec<(String, i64, f64)> {
        let mut rows: Vec<_> = self
            .prices
            .iter()
            .map(|((c, h), p)| (c.clone(), *h, *p))
            .collect();
        rows.sort_by(|a, b| (a.0.as_str(), a.1).cmp(&(b.0.as_str(), b.1)));
        rows
    }
}

/// Curated address labels: contracts known not to be MEV bots, and
/// (optionally) identified MEV contracts. The two sets are disjoint.
#[derive(Debug, Clone, Default)]
pub struct LabelSet {
    pub non_mev: HashSet<String>,
    pub mev: HashSet<String>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_non_mev(&mut self, address: &str) -> Result<(), DataError> {
        if self.mev.contains(address) {
            return Err(DataError::Registry(format!(
                "address {address} labeled both mev and non_mev"
            )));
        }
        self.non_mev.insert(address.to_string());
        Ok(())
    }

    pub fn insert_mev(&mut self, address: &str) -> Result<(), DataError> {
        if self.non_mev.contains(address) {
            return Err(DataError::Registry(format!(
                "address {address} labeled both mev and non_mev"
            )));
        }
        self.mev.insert(address.to_string());
        Ok(())
    }

    pub fn is_non_mev(&self, address: &str) -> bool {
        self.non_mev.contains(address)
    }
}

/// How loaders treat malformed lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Abort on the first malformed line.
    Strict,
    /// Skip malformed lines, counting them.
    #[default]
    Lenient,
}

/// Per-file load statistics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub records: usize,
    pub skipped: usize,
    /// One `line N: message` entry per skipped line (lenient mode).
    pub errors: Vec<String>,
}

trait Validated: for<'de> Deserialize<'de> {
    const KIND: &'static str;
    fn validate_record(&self) -> Result<(), String>;
}

impl Validated for SwapRecord {
    const KIND: &'static str = "swaps";
    fn validate_record(&self) -> Result<(), String> {
        self.check_invariants()
    }
}

impl Validated for TransferRecord {
    const KIND: &'static str = "transfers";
    fn validate_record(&self) -> Result<(), String> {
        self.check_invariants()
    }
}

impl Validated for NativeBridgeLink {
    const KIND: &'static str = "native_links";
    fn validate_record(&self) -> Result<(), String> {
        self.check_invariants()
    }
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_header(path: &Path, line_no: usize, line: &str, kind: &str) -> Result<(), DataError> {
    let header: JsonlHeader = serde_json::from_str(line).map_err(|e| DataError::Malformed {
        path: path.display().to_string(),
        line: line_no,
        message: format!("missing or invalid header line: {e}"),
    })?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(DataError::SchemaVersion {
            path: path.display().to_string(),
            found: header.schema_version,
            supported: SCHEMA_VERSION,
        });
    }
    if header.kind != kind {
        return Err(DataError::SchemaKind {
            path: path.display().to_string(),
            expected: kind.to_string(),
            found: header.kind,
        });
    }
    Ok(())
}

/// Streaming JSONL reader. Yields records in file order; malformed lines are
/// reported with their line number according to the load mode.
fn load_validated<T: Validated>(
    path: &Path,
    mode: LoadMode,
) -> Result<(Vec<T>, LoadReport), DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut report = LoadReport::default();
    let mut out = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            saw_header = true;
            parse_header(path, line_no, &line, T::KIND)?;
            continue;
        }
        let parsed: Result<T, String> = serde_json::from_str::<T>(&line)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate_record().map(|_| r));
        match parsed {
            Ok(rec) => {
                out.push(rec);
                report.records += 1;
            }
            Err(message) => match mode {
                LoadMode::Strict => {
                    return Err(DataError::Malformed {
                        path: path.display().to_string(),
                        line: line_no,
                        message,
                    })
                }
                LoadMode::Lenient => {
                    report.skipped += 1;
                    report.errors.push(format!("line {line_no}: {message}"));
                }
            },
        }
    }
    Ok((out, report))
}

fn write_jsonl<T: Serialize>(path: &Path, kind: &str, records: &[T]) -> Result<(), DataError> {
    let encode_err = |e: serde_json::Error| DataError::Malformed {
        path: path.display().to_string(),
        line: 0,
        message: e.to_string(),
    };
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let header = JsonlHeader {
        schema_version: SCHEMA_VERSION,
        kind: kind.to_string(),
    };
    let header_line = serde_json::to_string(&header).map_err(encode_err)?;
    writeln!(w, "{header_line}").map_err(|e| io_err(path, e))?;
    for rec in records {
        let line = serde_json::to_string(rec).map_err(encode_err)?;
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn load_swaps(path: &Path, mode: LoadMode) -> Result<(Vec<SwapRecord>, LoadReport), DataError> {
    load_validated(path, mode)
}

pub fn load_transfers(
    path: &Path,
    mode: LoadMode,
) -> Result<(Vec<TransferRecord>, LoadReport), DataError> {
    load_validated(path, mode)
}

pub fn load_native_links(
    path: &Path,
    mode: LoadMode,
) -> Result<(Vec<NativeBridgeLink>, LoadReport), DataError> {
    load_validated(path, mode)
}

pub fn write_swaps(path: &Path, records: &[SwapRecord]) -> Result<(), DataError> {
    write_jsonl(path, SwapRecord::KIND, records)
}

pub fn write_transfers(path: &Path, records: &[TransferRecord]) -> Result<(), DataError> {
    write_jsonl(path, TransferRecord::KIND, records)
}

pub fn write_native_links(path: &Path, records: &[NativeBridgeLink]) -> Result<(), DataError> {
    write_jsonl(path, NativeBridgeLink::KIND, records)
}

/// JSONL writer for other record kinds (matches, truth).
pub fn write_jsonl_records<T: Serialize>(
    path: &Path,
    kind: &str,
    records: &[T],
) -> Result<(), DataError> {
    write_jsonl(path, kind, records)
}

/// JSONL loader for other record kinds (matches, truth). Always strict.
pub fn load_jsonl_records<T: for<'de> Deserialize<'de>>(
    path: &Path,
    kind: &str,
) -> Result<Vec<T>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            saw_header = true;
            parse_header(path, idx + 1, &line, kind)?;
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| DataError::Malformed {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

const CSV_VERSION_COMMENT: &str = "# schema_version: 1";

fn csv_reader(path: &Path) -> Result<csv::Reader<File>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(file))
}

/// Loads `prices.csv` (`class,hour,usd`).
pub fn load_prices(path: &Path) -> Result<PriceTable, DataError> {
    let mut rdr = csv_reader(path)?;
    let mut table = PriceTable::new();
    for (idx, row) in rdr.deserialize::<(String, i64, f64)>().enumerate() {
        let (class, hour, usd) = row.map_err(|e| DataError::Malformed {
            path: path.display().to_string(),
            line: idx + 2,
            message: e.to_string(),
        })?;
        table.insert(&class, hour, usd)?;
    }
    Ok(table)
}

pub fn write_prices(path: &Path, table: &PriceTable) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{CSV_VERSION_COMMENT}").map_err(|e| io_err(path, e))?;
    writeln!(w, "class,hour,usd").map_err(|e| io_err(path, e))?;
    for (class, hour, usd) in table.iter_sorted() {
        writeln!(w, "{class},{hour},{usd}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Loads `equivalence.csv` (`chain,address,class,is_stable,is_native`).
pub fn load_equivalence(path: &Path) -> Result<EquivalenceRegistry, DataError> {
    let mut rdr = csv_reader(path)?;
    let mut reg = EquivalenceRegistry::new();
    for (idx, row) in rdr
        .deserialize::<(String, String, String, bool, bool)>()
        .enumerate()
    {
        let (chain, address, class, is_stable, is_native) =
            row.map_err(|e| DataError::Malformed {
                path: path.display().to_string(),
                line: idx + 2,
                message: e.to_string(),
            })?;
        reg.insert(
            &chain,
            &address,
            &class,
            ClassFlags {
                is_stable,
                is_native,
            },
        )?;
    }
    Ok(reg)
}

pub fn write_equivalence(path: &Path, reg: &EquivalenceRegistry) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{CSV_VERSION_COMMENT}").map_err(|e| io_err(path, e))?;
    writeln!(w, "chain,address,class,is_stable,is_native").map_err(|e| io_err(path, e))?;
    for (chain, asset, class, flags) in reg.iter_sorted() {
        writeln!(
            w,
            "{chain},{asset},{class},{},{}",
            flags.is_stable, flags.is_native
        )
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Loads `labels.csv` (`address,kind` with kind in `{non_mev, mev}`).
pub fn load_labels(path: &Path) -> Result<LabelSet, DataError> {
    let mut rdr = csv_reader(path)?;
    let mut labels = LabelSet::new();
    for (idx, row) in rdr.deserialize::<(String, String)>().enumerate() {
        let (address, kind) = row.map_err(|e| DataError::Malformed {
            path: path.display().to_string(),
            line: idx + 2,
            message: e.to_string(),
        })?;
        match kind.as_str() {
            "non_mev" => labels.insert_non_mev(&address)?,
            "mev" => labels.insert_mev(&address)?,
            other => {
                return Err(DataError::Malformed {
                    path: path.display().to_string(),
                    line: idx + 2,
                    message: format!("unknown label kind {other:?}"),
                })
            }
        }
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &LabelSet) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{CSV_VERSION_COMMENT}").map_err(|e| io_err(path, e))?;
    writeln!(w, "address,kind").map_err(|e| io_err(path, e))?;
    let mut rows: Vec<(String, &str)> = labels
        .non_mev
        .iter()
        .map(|a| (a.clone(), "non_mev"))
        .chain(labels.mev.iter().map(|a| (a.clone(), "mev")))
        .collect();
    rows.sort();
    for (address, kind) in rows {
        writeln!(w, "{address},{kind}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Collapses all swap events of one transaction into a single record:
/// total of the original input asset in, total of the final output asset
/// out, intermediate hop assets discarded.
///
/// The original input asset is the one that is only consumed within the
/// transaction, the final output the one only produced. Transactions where
/// either is not unique are rejected as ambiguous.
pub fn aggregate_tx_swaps(events: &[SwapRecord]) -> Result<SwapRecord, DataError> {
    let first = events.first().ok_or_else(|| DataError::AmbiguousEndpoints {
        tx_hash: String::new(),
        message: "no events".into(),
    })?;
    debug_assert!(events.iter().all(|e| e.tx_hash == first.tx_hash));
    let ins: HashSet<&str> = events.iter().map(|e| e.asset_in.as_str()).collect();
    let outs: HashSet<&str> = events.iter().map(|e| e.asset_out.as_str()).collect();
    let sources: Vec<&str> = ins.difference(&outs).copied().collect();
    let sinks: Vec<&str> = outs.difference(&ins).copied().collect();
    if sources.len() != 1 || sinks.len() != 1 {
        return Err(DataError::AmbiguousEndpoints {
            tx_hash: first.tx_hash.clone(),
            message: format!(
                "{} candidate input assets, {} candidate output assets",
                sources.len(),
                sinks.len()
            ),
        });
    }
    let (source, sink) = (sources[0], sinks[0]);
    let mut amount_in = Decimal::ZERO;
    let mut amount_out = Decimal::ZERO;
    for e in events {
        if e.asset_in == source {
            amount_in += e.amount_in;
        }
        if e.asset_out == sink {
            amount_out += e.amount_out;
        }
    }
    Ok(SwapRecord {
        asset_in: source.to_string(),
        asset_out: sink.to_string(),
        amount_in,
        amount_out,
        ..first.clone()
    })
}
