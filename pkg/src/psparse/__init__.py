"""Partial sparse formats (pCSR, pCSC, pCOO) for nnz-balanced multi-worker SpMV."""
from .errors import (DimensionError, FitError, FormatError, MatrixMarketError, PartitionError,
                     PlanMismatchError, PSparseError, UnsupportedOrderError)
from .formats import (CooMatrix, CscMatrix, CsrMatrix, SortOrder, coo_to_csc, coo_to_csr,
                      csc_to_coo, csc_to_csr, csr_to_coo, csr_to_csc, spmv_coo_ref,
                      spmv_csc_ref, spmv_csr_ref, spmv_ref)
from .mmio import mm_read, mm_write
from .partition import (DeviceGroup, DeviceTopology, PartFormat, PartitionPlan, PcooPart,
                        PcscPart, PcsrPart, block_plan, coo_to_pcoo, csc_to_pcsc, csr_to_pcsr,
                        materialize, merge_parts_to_csr, nnz_boundaries, owner_row,
                        two_level_plan)
from .executor import (CostModel, ExecReport, Variant, execute, kernel_pcoo, kernel_pcsc,
                       kernel_pcsr, merge_col_based, merge_row_based, simulate_cost)
from .bench import (GenSpec, PowerLaw, TwoClassImbalance, UniformRandom, fit_R, gen_matrix,
                    run_imbalance_study, run_scaling_study)

__version__ = "0.1.0"
