//! Statement execution.
//!
//! UPDATE and DELETE run under one of two plans. EDIT records the change as
//! deltas in the attached store and leaves master segments untouched.
//! OVERWRITE materializes the merged view with the change applied into new
//! segments and swaps them in, emptying the attached store.
//!
//! A segment swap (OVERWRITE or COMPACT) is ordered for crash safety:
//!
//! 1. write the new segments (each file id is persisted before its file);
//! 2. commit the catalog with the new segment list and `epoch + 1`;
//! 3. start a fresh journal for the new epoch;
//! 4. delete the old segments.
//!
//! Step 2 is the commit point. A journal left over from the old epoch is
//! discarded when the database is opened, as are segment files the catalog
//! does not reference.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use dualtable_core::delta::DeltaOp;
use dualtable_core::dml::DmlOptions;
use dualtable_core::cost::choose_plan;
use dualtable_core::expr::{bind_assignments, BoundAssignment, BoundPredicate, Predicate};
use dualtable_core::ratio::statement_key;
use dualtable_core::{
    Column, ColumnType, ModOp, Plan, PlanDecision, RecordId, Row, Schema, Statement,
    TableStats, Value,
};

use crate::attached::{journal_file_name, AttachedStore};
use crate::catalog::{Catalog, StoredCostParams, CATALOG_FILE};
use crate::config::Config;
use crate::counters::{ByteCounts, IoCounters};
use crate::error::{Error, Result};
use crate::fault::{self, FaultInjector, Fs};
use crate::master::{MasterStore, SegmentHandle, SegmentSetWriter};
use crate::union::{union_read, union_read_parallel, ReadContext};

pub const AUDIT_FILE: &str = "audit.log";

/// What UPDATE, DELETE and COMPACT did.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionReport {
    pub rows_matched: u64,
    pub rows_changed: u64,
    /// Visible rows the statement examined.
    pub rows_scanned: u64,
    pub plan_used: Option<Plan>,
    /// Cost-model decision, when the rates needed for it are configured.
    pub decision: Option<PlanDecision>,
    /// Bytes moved while the statement ran.
    pub bytes: ByteCounts,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Rows(QueryResult),
    Report(ExecutionReport),
    /// DDL, INSERT and LOAD: a count of affected rows.
    Done { rows: u64 },
}

#[derive(Debug)]
struct TableState {
    table_id: u32,
    schema: Schema,
    segments: Vec<SegmentHandle>,
    attached: AttachedStore,
}

impl TableState {
    fn ctx<'a>(
        &'a self,
        master: &'a MasterStore,
        projection: Option<&'a [usize]>,
        predicate: Option<&'a BoundPredicate>,
    ) -> ReadContext<'a> {
        ReadContext {
            master,
            attached: &self.attached,
            schema: &self.schema,
            projection,
            predicate,
        }
    }

    fn stats(&self) -> TableStats {
        TableStats::new(
            self.segments.iter().map(|s| s.bytes).sum(),
            self.segments.iter().map(|s| s.row_count).sum(),
            self.attached.size_bytes(),
            self.attached.len() as u64,
        )
    }
}

#[derive(Debug)]
pub struct Database {
    config: Config,
    fs: Fs,
    counters: Arc<IoCounters>,
    master: MasterStore,
    catalog: Catalog,
    tables: HashMap<String, TableState>,
    poisoned: bool,
}

impl Database {
    pub fn open(config: Config) -> Result<Self> {
        Self::open_with_faults(config, None)
    }

    /// Opens with every file-system mutation routed through `faults`.
    pub fn open_with_faults(config: Config, faults: Option<FaultInjector>) -> Result<Self> {
        let dir = config.data_dir.clone();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let fs = Fs::new(config.sync_writes, faults);
        let counters = Arc::new(IoCounters::default());
        let master = MasterStore::new(&dir, fs.clone(), counters.clone());
        fs.remove_file(&fault::tmp_path(&dir.join(CATALOG_FILE)))?;
        let mut catalog = Catalog::open(&dir, fs.clone())?;
        let mut dirty = false;

        let stored = StoredCostParams {
            master_write_rate: config.master_write_rate,
            master_read_rate: config.master_read_rate,
            attached_write_rate: config.attached_write_rate,
            attached_read_rate: config.attached_read_rate,
            k_default: config.k_default,
            marker_size: dualtable_core::delta::MARKER_SIZE as f64,
        };
        if catalog.data().cost_params != Some(stored) {
            catalog.set_cost_params(stored);
            dirty = true;
        }

        let mut tables = HashMap::new();
        for t in catalog.data().tables.clone() {
            let segments = t
                .segments
                .iter()
                .map(|m| SegmentHandle::from_meta(&dir, t.table_id, m))
                .collect();
            let attached = AttachedStore::open(
                &dir,
                t.table_id,
                t.schema.clone(),
                t.epoch,
                fs.clone(),
                counters.clone(),
            )?;
            let state = TableState {
                table_id: t.table_id,
                schema: t.schema.clone(),
                segments,
                attached,
            };
            let stats = state.stats();
            if stats != t.stats {
                catalog.table_mut(&t.name)?.stats = stats;
                dirty = true;
            }
            tables.insert(t.name.clone(), state);
        }
        if dirty {
            catalog.commit()?;
        }

        let db = Database {
            config,
            fs,
            counters,
            master,
            catalog,
            tables,
            poisoned: false,
        };
        db.remove_orphans()?;
        Ok(db)
    }

    /// Deletes files no catalog entry refers to: segments from interrupted
    /// writes or swaps, journals of dropped tables and temp files.
    fn remove_orphans(&self) -> Result<()> {
        let mut live: HashSet<String> = HashSet::new();
        live.insert(CATALOG_FILE.to_owned());
        live.insert(AUDIT_FILE.to_owned());
        for t in self.tables.values() {
            live.insert(journal_file_name(t.table_id));
            for s in &t.segments {
                if let Some(name) = s.path.file_name() {
                    live.insert(name.to_string_lossy().into_owned());
                }
            }
        }
        let dir = &self.config.data_dir;
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if live.contains(&name) {
                continue;
            }
            if is_engine_file(&name) {
                self.fs.remove_file(&entry.path())?;
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn data_dir(&self) -> &Path {
        &self.config.data_dir
    }

    pub fn counters(&self) -> ByteCounts {
        self.counters.snapshot()
    }

    pub fn master(&self) -> &MasterStore {
        &self.master
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn state(&self, table: &str) -> Result<&TableState> {
        self.tables
            .get(table)
            .ok_or_else(|| Error::UnknownTable(table.to_owned()))
    }

    pub fn schema(&self, table: &str) -> Result<&Schema> {
        Ok(&self.state(table)?.schema)
    }

    pub fn segments(&self, table: &str) -> Result<&[SegmentHandle]> {
        Ok(&self.state(table)?.segments)
    }

    pub fn attached(&self, table: &str) -> Result<&AttachedStore> {
        Ok(&self.state(table)?.attached)
    }

    pub fn stats(&self, table: &str) -> Result<TableStats> {
        Ok(self.state(table)?.stats())
    }

    pub fn table_names(&self) -> Vec<String> {
        let mut names: Vec<_> = self.tables.keys().cloned().collect();
        names.sort();
        names
    }

    /// Up-to-date rows of `table`, optionally filtered (after merging) and
    /// projected.
    pub fn union_read(
        &self,
        table: &str,
        projection: Option<&[usize]>,
        predicate: Option<&BoundPredicate>,
    ) -> Result<Vec<(RecordId, Row)>> {
        let t = self.state(table)?;
        union_read(t.ctx(&self.master, projection, predicate), &t.segments).collect()
    }

    /// Same as [`Database::union_read`] with one thread per segment.
    pub fn union_read_parallel(&self, table: &str) -> Result<Vec<(RecordId, Row)>> {
        let t = self.state(table)?;
        union_read_parallel(t.ctx(&self.master, None, None), &t.segments)
    }

    /// Raw master rows, ignoring the attached store.
    pub fn scan_table(&self, table: &str) -> Result<Vec<(RecordId, Row)>> {
        let t = self.state(table)?;
        self.master.scan_table(&t.segments, &t.schema, None).collect()
    }

    pub fn parse_and_execute(&mut self, text: &str) -> Result<Outcome> {
        let stmt = dualtable_core::parse(text)?;
        self.execute(&stmt)
    }

    pub fn execute(&mut self, stmt: &Statement) -> Result<Outcome> {
        if self.poisoned {
            return Err(Error::Poisoned);
        }
        let result = self.dispatch(stmt);
        if let Err(Error::Io { .. } | Error::Catalog(_)) = &result {
            self.poisoned = true;
        }
        result
    }

    fn dispatch(&mut self, stmt: &Statement) -> Result<Outcome> {
        match stmt {
            Statement::Create { table, columns } => self.create(table, columns.clone()),
            Statement::Drop { table } => self.drop_table(table),
            Statement::Load { table, path } => self.load_csv(table, Path::new(path)),
            Statement::Insert { table, rows } => self.insert(table, rows.clone()),
            Statement::Select {
                table,
                columns,
                predicate,
            } => self
                .select(table, columns.as_deref(), predicate.as_ref())
                .map(Outcome::Rows),
            Statement::Update { .. } | Statement::Delete { .. } => {
                let report = self.exec_modify(stmt)?;
                self.maybe_auto_compact(stmt.table())?;
                Ok(Outcome::Report(report))
            }
            Statement::Compact { table } => self.compact(table).map(Outcome::Report),
        }
    }

    fn create(&mut self, table: &str, columns: Vec<Column>) -> Result<Outcome> {
        if self.tables.contains_key(table) {
            return Err(Error::TableExists(table.to_owned()));
        }
        let schema = Schema::new(columns)?;
        let desc = self.catalog.create_table(table, schema.clone())?.clone();
        let attached = AttachedStore::open(
            &self.config.data_dir,
            desc.table_id,
            schema.clone(),
            desc.epoch,
            self.fs.clone(),
            self.counters.clone(),
        )?;
        self.tables.insert(
            table.to_owned(),
            TableState {
                table_id: desc.table_id,
                schema,
                segments: Vec::new(),
                attached,
            },
        );
        Ok(Outcome::Done { rows: 0 })
    }

    fn drop_table(&mut self, table: &str) -> Result<Outcome> {
        self.state(table)?;
        self.catalog.drop_table(table)?;
        let t = self.tables.remove(table).expect("checked above");
        let journal = t.attached.path().to_owned();
        drop(t.attached);
        for s in &t.segments {
            self.master.remove_segment(s)?;
        }
        self.fs.remove_file(&journal)?;
        Ok(Outcome::Done { rows: 0 })
    }

    pub fn insert(&mut self, table: &str, rows: Vec<Vec<Value>>) -> Result<Outcome> {
        let schema = self.schema(table)?.clone();
        let rows: Vec<Row> = rows
            .into_iter()
            .map(|r| schema.coerce_row(r))
            .collect::<Result<_, _>>()?;
        self.append_rows(table, &rows)?;
        Ok(Outcome::Done {
            rows: rows.len() as u64,
        })
    }

    /// Writes `rows` as new segments after the existing ones.
    fn append_rows(&mut self, table: &str, rows: &[Row]) -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let Database {
            catalog,
            master,
            tables,
            config,
            ..
        } = self;
        let t = tables.get_mut(table).ok_or_else(|| Error::UnknownTable(table.to_owned()))?;
        let mut writer = SegmentSetWriter::new(master, t.table_id, t.schema.clone(), config.segment_target_bytes);
        for row in rows {
            writer.push(row, &mut || catalog.allocate_file_id(table))?;
        }
        let new = writer.finish()?;
        let desc = catalog.table_mut(table)?;
        desc.segments.extend(new.iter().map(SegmentHandle::meta));
        t.segments.extend(new);
        desc.stats = t.stats();
        catalog.commit()
    }

    fn load_csv(&mut self, table: &str, path: &Path) -> Result<Outcome> {
        let schema = self.schema(table)?.clone();
        let rows = read_csv(path, &schema)?;
        self.append_rows(table, &rows)?;
        Ok(Outcome::Done {
            rows: rows.len() as u64,
        })
    }

    pub fn select(
        &self,
        table: &str,
        columns: Option<&[String]>,
        predicate: Option<&Predicate>,
    ) -> Result<QueryResult> {
        let t = self.state(table)?;
        let projection: Option<Vec<usize>> = columns
            .map(|cols| cols.iter().map(|c| t.schema.resolve(c)).collect::<Result<_, _>>())
            .transpose()?;
        let predicate = predicate.map(|p| p.bind(&t.schema)).transpose()?;
        let names = match &projection {
            Some(p) => p.iter().map(|&i| t.schema.columns()[i].name.clone()).collect(),
            None => t.schema.columns().iter().map(|c| c.name.clone()).collect(),
        };
        let rows = union_read(
            t.ctx(&self.master, projection.as_deref(), predicate.as_ref()),
            &t.segments,
        )
        .map(|r| r.map(|(_, row)| row))
        .collect::<Result<_>>()?;
        Ok(QueryResult {
            columns: names,
            rows,
        })
    }

    fn exec_modify(&mut self, stmt: &Statement) -> Result<ExecutionReport> {
        let started = Instant::now();
        let before = self.counters.snapshot();
        let (table, assignments, predicate, options, op) = match stmt {
            Statement::Update {
                table,
                assignments,
                predicate,
                options,
            } => (table, assignments.as_slice(), predicate, options, ModOp::Update),
            Statement::Delete {
                table,
                predicate,
                options,
            } => (table, &[][..], predicate, options, ModOp::Delete),
            _ => unreachable!("exec_modify called for {:?}", stmt.kind()),
        };
        let t = self.state(table)?;
        let bound_pred = predicate.as_ref().map(|p| p.bind(&t.schema)).transpose()?;
        let bound_assign = match op {
            ModOp::Update => bind_assignments(assignments, &t.schema)?,
            ModOp::Delete => Vec::new(),
        };
        let key = statement_key(stmt);
        let (plan, decision, ratio) = self.decide(table, op, key, options)?;

        let work = Work {
            op,
            predicate: bound_pred.as_ref(),
            assignments: &bound_assign,
        };
        let tally = match plan {
            Plan::Edit => self.run_edit(table, &work)?,
            Plan::Overwrite => self.run_overwrite(table, &work)?,
        };

        if tally.scanned > 0 {
            let observed = tally.matched as f64 / tally.scanned as f64;
            self.catalog
                .record_observed_ratio(table, key, observed, self.config.ewma_weight)?;
        }
        let stats = self.state(table)?.stats();
        self.catalog.table_mut(table)?.stats = stats;
        self.catalog.commit()?;
        self.audit(table, op, ratio, decision.as_ref(), plan);

        Ok(ExecutionReport {
            rows_matched: tally.matched,
            rows_changed: tally.changed,
            rows_scanned: tally.scanned,
            plan_used: Some(plan),
            decision,
            bytes: self.counters.snapshot() - before,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }

    /// Plan for a modification: forced by `PLAN =`, otherwise the cost model.
    fn decide(
        &self,
        table: &str,
        op: ModOp,
        key: u64,
        options: &DmlOptions,
    ) -> Result<(Plan, Option<PlanDecision>, f64)> {
        let ratio = self
            .catalog
            .estimate_ratio(table, key, options.ratio, self.config.default_ratio)?;
        let k = options.k.unwrap_or(self.config.k_default);
        let stats = self.state(table)?.stats();
        let decision = match self.config.cost_params(k) {
            Ok(p) => Some(choose_plan(op, &stats, ratio, &p)?),
            Err(e) if options.plan.is_none() => return Err(e),
            Err(_) => None,
        };
        let plan = options
            .plan
            .or(decision.map(|d| d.plan))
            .expect("either forced or decided");
        Ok((plan, decision, ratio))
    }

    fn run_edit(&mut self, table: &str, work: &Work<'_>) -> Result<Tally> {
        let t = self.state(table)?;
        let mut tally = Tally::default();
        let mut ops = Vec::new();
        for item in union_read(t.ctx(&self.master, None, None), &t.segments) {
            let (id, row) = item?;
            tally.scanned += 1;
            if !work.matches(&row)? {
                continue;
            }
            tally.matched += 1;
            match work.op {
                ModOp::Delete => {
                    tally.changed += 1;
                    ops.push(DeltaOp::Delete { record_id: id });
                }
                ModOp::Update => {
                    let cells = work.new_cells(&row)?;
                    if cells.iter().any(|(&i, v)| row[usize::from(i)] != *v) {
                        tally.changed += 1;
                    }
                    ops.push(DeltaOp::Patch {
                        record_id: id,
                        cells,
                    });
                }
            }
        }
        self.tables
            .get_mut(table)
            .expect("state checked")
            .attached
            .apply(&ops)?;
        Ok(tally)
    }

    fn run_overwrite(&mut self, table: &str, work: &Work<'_>) -> Result<Tally> {
        let mut tally = Tally::default();
        let new = {
            let Database {
                catalog,
                master,
                tables,
                config,
                ..
            } = &mut *self;
            let t = tables.get(table).expect("state checked");
            let mut writer =
                SegmentSetWriter::new(master, t.table_id, t.schema.clone(), config.segment_target_bytes);
            let result = (|| -> Result<()> {
                for item in union_read(t.ctx(master, None, None), &t.segments) {
                    let (_, mut row) = item?;
                    tally.scanned += 1;
                    if work.matches(&row)? {
                        tally.matched += 1;
                        match work.op {
                            ModOp::Delete => {
                                tally.changed += 1;
                                continue;
                            }
                            ModOp::Update => {
                                let mut changed = false;
                                for (i, v) in work.new_cells(&row)? {
                                    let slot = &mut row[usize::from(i)];
                                    changed |= *slot != v;
                                    *slot = v;
                                }
                                tally.changed += u64::from(changed);
                            }
                        }
                    }
                    writer.push(&row, &mut || catalog.allocate_file_id(table))?;
                }
                Ok(())
            })();
            if let Err(e) = result {
                for s in writer.written() {
                    let _ = master.remove_segment(s);
                }
                return Err(e);
            }
            writer.finish()?
        };
        self.swap_segments(table, new)?;
        Ok(tally)
    }

    /// Replaces the table's segments with `new` and empties its attached
    /// store.
    fn swap_segments(&mut self, table: &str, new: Vec<SegmentHandle>) -> Result<()> {
        let t = self.tables.get_mut(table).ok_or_else(|| Error::UnknownTable(table.to_owned()))?;
        let desc = self.catalog.table_mut(table)?;
        let epoch = desc.epoch + 1;
        desc.epoch = epoch;
        desc.segments = new.iter().map(SegmentHandle::meta).collect();
        desc.stats = TableStats::new(
            new.iter().map(|s| s.bytes).sum(),
            new.iter().map(|s| s.row_count).sum(),
            0,
            0,
        );
        self.catalog.commit()?;
        let old = std::mem::replace(&mut t.segments, new);
        t.attached.reset(epoch)?;
        for s in &old {
            self.master.remove_segment(s)?;
        }
        Ok(())
    }

    /// Rewrites the merged view into new segments and empties the attached
    /// store. Holding `&mut self` excludes every other operation meanwhile.
    pub fn compact(&mut self, table: &str) -> Result<ExecutionReport> {
        if self.poisoned {
            return Err(Error::Poisoned);
        }
        let result = self.compact_inner(table);
        if let Err(Error::Io { .. } | Error::Catalog(_)) = &result {
            self.poisoned = true;
        }
        result
    }

    fn compact_inner(&mut self, table: &str) -> Result<ExecutionReport> {
        let started = Instant::now();
        let before = self.counters.snapshot();
        self.state(table)?;
        let work = Work {
            op: ModOp::Update,
            predicate: None,
            assignments: &[],
        };
        let tally = self.run_overwrite(table, &work)?;
        Ok(ExecutionReport {
            rows_matched: 0,
            rows_changed: 0,
            rows_scanned: tally.scanned,
            plan_used: None,
            decision: None,
            bytes: self.counters.snapshot() - before,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }

    /// Whether the attached store has grown past the compaction threshold
    /// relative to the master data.
    pub fn auto_compact_check(&self, table: &str) -> Result<bool> {
        let s = self.state(table)?.stats();
        Ok(needs_compaction(&s, self.config.compact_threshold))
    }

    fn maybe_auto_compact(&mut self, table: &str) -> Result<()> {
        if self.config.auto_compact && self.auto_compact_check(table)? {
            self.compact_inner(table)?;
        }
        Ok(())
    }

    fn audit(&self, table: &str, op: ModOp, ratio: f64, decision: Option<&PlanDecision>, plan: Plan) {
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        let margin = decision.map_or(String::new(), |d| format!("{:.6}", d.cost_margin_seconds));
        let line = format!("{ts:.3}, {table}, {op}, {ratio}, {margin}, {plan}\n");
        // The audit trail is informational; failing to append must not fail
        // the statement.
        let path = self.config.data_dir.join(AUDIT_FILE);
        if let Ok(mut f) = fs::OpenOptions::new().create(true).append(true).open(path) {
            let _ = f.write_all(line.as_bytes());
        }
    }
}

/// `attached_size / data_size > threshold`; a table with no master data
/// needs compaction as soon as it has any deltas.
pub fn needs_compaction(stats: &TableStats, threshold: f64) -> bool {
    if stats.data_size == 0 {
        return stats.attached_size > 0;
    }
    stats.attached_size as f64 / stats.data_size as f64 > threshold
}

fn is_engine_file(name: &str) -> bool {
    name.ends_with(".tmp")
        || (name.starts_with('t') && (name.ends_with(".dtb") || name.ends_with("_attached.log")))
}

#[derive(Debug, Default)]
struct Tally {
    scanned: u64,
    matched: u64,
    changed: u64,
}

struct Work<'a> {
    op: ModOp,
    predicate: Option<&'a BoundPredicate>,
    assignments: &'a [BoundAssignment],
}

impl Work<'_> {
    fn matches(&self, row: &Row) -> Result<bool> {
        match self.predicate {
            None => Ok(true),
            Some(p) => Ok(p.matches(row)?),
        }
    }

    /// New values of the assigned columns, all computed from the row as it
    /// was before the statement.
    fn new_cells(&self, row: &Row) -> Result<BTreeMap<u16, Value>> {
        self.assignments
            .iter()
            .map(|a| Ok((a.ordinal as u16, a.eval(row)?)))
            .collect()
    }
}

/// Reads a CSV file whose header names the table's columns (in any order).
/// Empty fields are null.
pub fn read_csv(path: &Path, schema: &Schema) -> Result<Vec<Row>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Load(format!("{}: {e}", path.display())))?
        .clone();
    let mut order = Vec::with_capacity(schema.len());
    for c in schema.columns() {
        let pos = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(&c.name))
            .ok_or_else(|| Error::Load(format!("{}: no column `{}` in header", path.display(), c.name)))?;
        order.push(pos);
    }
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        let line = n + 2;
        let values = schema
            .columns()
            .iter()
            .zip(&order)
            .map(|(c, &pos)| {
                let field = rec.get(pos).unwrap_or("");
                parse_field(field, c.ty).ok_or_else(|| {
                    Error::Load(format!(
                        "{}:{line}: `{field}` is not a valid {} for column `{}`",
                        path.display(),
                        c.ty,
                        c.name
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(Row(values));
    }
    Ok(rows)
}

fn parse_field(field: &str, ty: ColumnType) -> Option<Value> {
    if field.is_empty() {
        return Some(Value::Null);
    }
    let t = field.trim();
    Some(match ty {
        ColumnType::Int64 => Value::Int(t.parse().ok()?),
        ColumnType::Float64 => Value::Float(t.parse().ok()?),
        ColumnType::Bool => match t.to_ascii_lowercase().as_str() {
            "true" | "1" => Value::Bool(true),
            "false" | "0" => Value::Bool(false),
            _ => return None,
        },
        ColumnType::Utf8 => Value::Str(field.to_owned()),
    })
}

/// Copies a closed database directory, for experiments that need many
/// identical starting points.
pub fn copy_database(from: &Path, to: &Path) -> Result<()> {
    fs::create_dir_all(to).map_err(|e| Error::io(to, e))?;
    for entry in fs::read_dir(from).map_err(|e| Error::io(from, e))? {
        let entry = entry.map_err(|e| Error::io(from, e))?;
        let name = entry.file_name();
        if name == AUDIT_FILE {
            continue;
        }
        let dst: PathBuf = to.join(&name);
        fs::copy(entry.path(), &dst).map_err(|e| Error::io(&dst, e))?;
    }
    Ok(())
}
