"""
默认应用设置
"""

# 日志设置
LOG_DIR = "logs"
LOG_LEVEL = "INFO"
MAX_LOG_SIZE = 10 * 1024 * 1024  # 10MB
LOG_BACKUP_COUNT = 5

# 结果输出设置
OUTPUT_DIR = "results"
CSV_FLOAT_FORMAT = "%.17g"

# 实验设置
MAX_WORKERS = 4
MIN_TAIL_REPS = 1000

# 数值优化设置
NEWTON_MAX_ITER = 200
NEWTON_GRAD_TOL = 1e-8
DIVERGENCE_CAP = 1e6
CONDITION_LIMIT = 1e12

# 验收容差 (工程取值，有限n下无理论误差率)
LDP_GAP_TOLERANCE = 0.10
MDP_GAP_TOLERANCE = 0.35
CLT_RELATIVE_TOLERANCE = 0.10
CLT_OFFDIAG_TOLERANCE = 0.05
FILTER_MIN_FRACTION = 0.95
