// Mirrors of the server's JSON schemas. The client renders these payloads
// verbatim; it never computes costs itself.

export interface Environment {
  n_entries: number;
  entry_bits: number;
  entries_per_page: number;
  key_bits: number;
  total_memory_bits: number;
  page_bytes: number;
}

export interface DesignKnobs {
  growth_factor: number;
  hot_merge_threshold: number;
  cold_merge_threshold: number;
  node_size_pages: number;
  fence_filter_memory_bits: number;
  buffer_memory_bits: number;
}

export interface WorkloadMix {
  zero_point_frac: number;
  point_frac: number;
  short_range_frac: number;
  long_range_frac: number;
  update_frac: number;
}

export interface CostVector {
  zero_point_read: number;
  point_read: number;
  short_range: number;
  long_range: number;
  update: number;
  memory_footprint: number;
}

export interface CostResponse {
  knobs: DesignKnobs;
  cost: CostVector;
  derived: {
    levels: number;
    cold_levels: number;
    no_filter_levels: number;
    hash_table_levels: number[];
    [key: string]: unknown;
  };
  theta?: number;
  theta_terms?: Record<string, number>;
}

export interface GridRow {
  cache_frac: number;
  buffer_frac: number;
  bloom_frac: number;
  cell: [number, number, number];
  cache_bits: number;
  buffer_bits: number;
  bloom_bits: number;
  total_io: number;
  arrow_from: string;
  arrow_to: string;
}

export interface GridResponse {
  resolution: number;
  rows: GridRow[];
}

export interface SgdResponse {
  trajectory: { cache_bits: number; buffer_bits: number; bloom_bits: number }[];
  predicted_min: { cache_bits: number; buffer_bits: number; bloom_bits: number };
  io_by_step: number[];
}

export interface TransitionResponse {
  costs: {
    sort_merge: number;
    batch_insert: number;
    lazy_bound: number;
    preemptive: number;
    threshold_ratio: number;
  };
  strategy: string;
}

export interface ApiError {
  code: string;
  message: string;
}
