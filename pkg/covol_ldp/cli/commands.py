"""
命令行界面命令定义
"""

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click
from tabulate import tabulate

from covol_ldp import __version__
from covol_ldp.cli.formatters import format_check, format_records, format_value, format_vector
from covol_ldp.core.estimate import ThresholdFn, running_sums
from covol_ldp.core.experiments import (
    EventSpec,
    Statistic,
    jump_filter_report,
    ldp_slope,
    mdp_slope,
    run_cgf,
    run_clt,
    run_consistency,
)
from covol_ldp.core.model import ModelSpec, VolVector
from covol_ldp.core.rates import (
    LambdaVec,
    RateContext,
    SingularMatrixError,
    clt_covariance,
    contract_mdp,
    contract_solve,
    i_ldp_constant,
    i_ldp_solve,
    i_mdp,
    j_ldp_ac,
    j_mdp,
    lambda_fn,
)
from covol_ldp.core.regimes import PowerLawRegime, check_ldp, check_mdp, corroborate
from covol_ldp.core.simulate import simulate_path
from covol_ldp.reports.writer import SCHEMAS, ResultWriter, write_json
from covol_ldp.storage import repository
from covol_ldp.utils.config import get_setting
from covol_ldp.utils.validators import validate_seed

logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_ASSERT = 3

# 命令执行中可预期的错误，统一输出 "错误: ..." 并以非零码退出
EXPECTED_ERRORS = (ValueError, OSError, RuntimeError, KeyError)

MODES = ["consistency", "clt", "ldp", "mdp", "filter", "mgf"]


def parse_vector(value: Any, name: str) -> Tuple[float, float, float]:
    """解析三维向量 ("1,0,0" 或列表)"""
    items = value.split(",") if isinstance(value, str) else list(value)
    if len(items) != 3:
        raise ValueError(f"{name} 需要3个分量 (当前 {value})")
    return tuple(float(v) for v in items)


def parse_int_list(value: Any, name: str) -> List[int]:
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        result = [int(v) for v in items]
    except (TypeError, ValueError):
        raise ValueError(f"{name} 必须是逗号分隔的整数列表 (当前 {value})")
    if not result:
        raise ValueError(f"{name} 不能为空")
    return result


@dataclass
class RunConfig:
    """一次运行的全部参数

    优先级：命令行参数 > 运行配置文件 > 默认值。
    """

    model: Optional[str] = None
    threshold_c: float = 1.0
    threshold_beta: Optional[float] = None
    gamma: Optional[float] = None
    mode: Optional[str] = None
    n: int = 1000
    n_grid: List[int] = field(default_factory=lambda: [25, 50, 100, 200, 400])
    reps: Optional[int] = None
    direction: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    level: float = 1.8
    theta: Tuple[float, float, float] = (0.1, 0.1, 0.0)
    polarized: bool = False
    seed: int = 0
    workers: Optional[int] = None
    out: Optional[str] = None
    check: bool = False

    @classmethod
    def from_sources(cls, flags: Dict[str, Any], config_file: Optional[str] = None) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        values: Dict[str, Any] = {}

        if config_file:
            file_values = repository.load_run_config(config_file)
            unknown = sorted(set(file_values) - known)
            if unknown:
                raise ValueError(f"运行配置文件包含未知字段: {', '.join(unknown)}")
            values.update(file_values)

        # 未给出的参数 (None) 与未开启的开关不覆盖配置文件
        values.update({k: v for k, v in flags.items() if v is not None and v is not False})

        config = cls(**values)
        config.direction = parse_vector(config.direction, "direction")
        config.theta = parse_vector(config.theta, "theta")
        config.n_grid = parse_int_list(config.n_grid, "n_grid")
        if config.reps is None:
            config.reps = get_setting("MIN_TAIL_REPS", 1000)
        if config.workers is None:
            config.workers = get_setting("MAX_WORKERS", 4)

        valid, message = validate_seed(config.seed)
        if not valid:
            raise ValueError(message)
        return config

    def to_dict(self) -> Dict[str, Any]:
        """配置回显 (线程数不影响结果，不写入)"""
        data = asdict(self)
        data.pop("workers")
        data["direction"] = list(self.direction)
        data["theta"] = list(self.theta)
        return data

    def load_model(self) -> ModelSpec:
        if self.model is None:
            logger.info("未指定模型文件，使用 σ1=σ2=1, ρ=0 的默认模型")
            return ModelSpec()
        return repository.load_model(self.model)

    def regime(self) -> Optional[PowerLawRegime]:
        if self.threshold_beta is None:
            return None
        return PowerLawRegime.create(self.threshold_c, self.threshold_beta, self.gamma)


def run_options(func):
    """各子命令共用的参数"""
    options = [
        click.option("--seed", type=int, default=None, help="随机种子 (默认0，写入所有输出)"),
        click.option("--workers", type=int, default=None, help="并行线程数"),
        click.option("--out", type=click.Path(file_okay=False), default=None, help="输出目录"),
        click.option("--assert", "check", is_flag=True, help="验收不通过时以退出码3结束"),
        click.option(
            "--config-file", type=click.Path(dir_okay=False), default=None, help="JSON运行配置文件"
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _fail(ctx: click.Context, message: str, code: int = EXIT_ERROR) -> None:
    click.echo(f"错误: {message}", err=True)
    ctx.exit(code)


def _report_violations(ctx: click.Context, violations: Sequence[str], check: bool) -> None:
    for violation in violations:
        click.echo(f"验收未通过: {violation}")
    if check and violations:
        ctx.exit(EXIT_ASSERT)


@click.group()
@click.version_option(version=__version__)
def cli():
    """阈值估计量偏差分析工具 - 模拟、估计、速率函数求值与蒙特卡洛验证"""
    pass


@cli.command("simulate")
@click.option("--model", type=click.Path(dir_okay=False), default=None, help="模型文件 (.toml/.json)")
@click.option("--n", type=int, default=None, help="网格大小")
@run_options
@click.pass_context
def simulate(ctx, model, n, seed, workers, out, check, config_file):
    """模拟一条路径并写出增量CSV"""
    try:
        config = RunConfig.from_sources(
            dict(model=model, n=n, seed=seed, workers=workers, out=out, check=check), config_file
        )
        path, truth = simulate_path(config.load_model(), config.n, config.seed)

        writer = ResultWriter(config.out, config.seed)
        csv_path = writer.path_for("path.csv")
        repository.write_path_csv(path, csv_path)
        writer.register(csv_path)

        truth_path = writer.path_for("path_truth.json")
        write_json(
            {
                "seed": config.seed,
                "n": path.n,
                "integrated": list(path.integrated.as_tuple()),
                "jump_sum_sq1": truth.sum_sq1,
                "jump_sum_sq2": truth.sum_sq2,
                "jump_sum_cross": truth.sum_cross,
            },
            truth_path,
        )
        writer.register(truth_path)
        writer.finish("simulate", config.to_dict())
    except EXPECTED_ERRORS as e:
        _fail(ctx, str(e))

    click.echo(f"已模拟路径: n={path.n}, seed={config.seed}")
    click.echo(f"跳跃数: ({int(path.jump_counts1.sum())}, {int(path.jump_counts2.sum())})")
    click.echo(f"输出: {csv_path}")


@cli.command("estimate")
@click.option("--path-file", type=click.Path(dir_okay=False), required=True, help="路径CSV文件")
@click.option("--threshold-c", type=float, default=None, help="阈值系数c")
@click.option("--threshold-beta", type=float, default=None, help="阈值指数β")
@click.option("--r-value", type=float, default=None, help="直接给定阈值r (优先于c, β)")
@run_options
@click.pass_context
def estimate(ctx, path_file, threshold_c, threshold_beta, r_value, seed, workers, out, check, config_file):
    """计算每个网格点上的阈值估计量"""
    try:
        config = RunConfig.from_sources(
            dict(threshold_c=threshold_c, threshold_beta=threshold_beta, out=out, check=check),
            config_file,
        )
        path = repository.read_path_csv(path_file)

        if r_value is not None:
            r = r_value
        elif config.threshold_beta is not None:
            r = ThresholdFn(config.threshold_c, config.threshold_beta).at(path.n)
        else:
            r = float("inf")

        sums = running_sums(path, r)
        records = [
            {"k": k + 1, "q1": float(row[0]), "q2": float(row[1]), "c": float(row[2])}
            for k, row in enumerate(sums)
        ]

        writer = ResultWriter(config.out, path.seed)
        csv_path = writer.emit("estimate", records, "estimate", {"r": r, "n": path.n})
        echo = config.to_dict()
        echo.update(path_file=path_file, r_value=r)
        writer.finish("estimate", echo)
    except EXPECTED_ERRORS as e:
        _fail(ctx, str(e))

    final = VolVector.from_array(sums[-1]) if len(sums) else VolVector()
    click.echo(f"阈值 r = {format_value(r)}")
    click.echo(f"V_1^n = {format_vector(final)}")
    click.echo(f"输出: {csv_path}")


def _rate_row(quantity: str, value: float, iterations=None, grad_norm=None, status: str = "ok") -> Dict[str, Any]:
    return {
        "quantity": quantity,
        "value": value,
        "iterations": iterations,
        "grad_norm": grad_norm,
        "status": status,
    }


def _guarded(quantity: str, evaluate) -> Dict[str, Any]:
    try:
        return _rate_row(quantity, evaluate())
    except SingularMatrixError as e:
        logger.warning(f"{quantity}: {str(e)}")
        return _rate_row(quantity, float("nan"), status="singular")


@cli.command("rate-eval")
@click.option("--model", type=click.Path(dir_okay=False), default=None, help="模型文件 (.toml/.json)")
@click.option("--x", "point", default=None, help="速率函数自变量 x1,x2,x3")
@click.option("--lam", default=None, help="累积量函数自变量 λ1,λ2,λ3")
@click.option("--knots-file", type=click.Path(dir_okay=False), default=None, help="分段线性路径节点CSV")
@click.option("--direction", default=None, help="半空间方向 u1,u2,u3")
@click.option("--level", type=float, default=None, help="半空间水平a")
@run_options
@click.pass_context
def rate_eval(ctx, model, point, lam, knots_file, direction, level, seed, workers, out, check, config_file):
    """求值速率函数并输出优化诊断"""
    try:
        config = RunConfig.from_sources(
            dict(model=model, direction=direction, level=level, out=out, check=check), config_file
        )
        if point is None and lam is None and knots_file is None and direction is None:
            raise ValueError("至少需要 --x、--lam、--knots-file 或 --direction 之一")

        spec = config.load_model()
        ctx_rates = RateContext.from_model(spec)
        rows = []

        if point is not None:
            x = VolVector(*parse_vector(point, "x"))
            solution = i_ldp_solve(ctx_rates, x)
            rows.append(
                _rate_row("I_ldp", solution.value, solution.iterations, solution.grad_norm, solution.status)
            )
            if spec.is_constant and spec.sigma1.values[0] > 0 and spec.sigma2.values[0] > 0:
                rows.append(
                    _rate_row(
                        "I_ldp_constant",
                        i_ldp_constant(spec.sigma1.values[0], spec.sigma2.values[0], spec.rho.values[0], x),
                    )
                )
            rows.append(_guarded("I_mdp", lambda: i_mdp(ctx_rates, x)))

        if lam is not None:
            rows.append(_rate_row("Lambda", lambda_fn(ctx_rates, LambdaVec(*parse_vector(lam, "lam")))))

        if knots_file is not None:
            phi = repository.read_knots_csv(knots_file)
            rows.append(_guarded("J_mdp", lambda: j_mdp(ctx_rates, phi)))
            rows.append(_rate_row("J_ldp_ac", j_ldp_ac(ctx_rates, phi)))

        if direction is not None:
            result = contract_solve(ctx_rates, config.direction, config.level)
            rows.append(_rate_row("contract", result.value, status=result.status))
            rows.append(_guarded("contract_mdp", lambda: contract_mdp(ctx_rates, config.direction, config.level)))
            # 协方差取 √n 波动的极限协方差 2Σ₁
            rows.append(
                _guarded(
                    "contract_mdp_clt",
                    lambda: contract_mdp(
                        ctx_rates, config.direction, config.level, covariance=clt_covariance(ctx_rates)
                    ),
                )
            )

        writer = ResultWriter(config.out, config.seed)
        writer.emit("rate", rows, "rate")
        echo = config.to_dict()
        echo.update(x=point, lam=lam, knots_file=knots_file)
        writer.finish("rate-eval", echo)
    except EXPECTED_ERRORS as e:
        _fail(ctx, str(e))

    click.echo("\n" + tabulate(format_records(rows, SCHEMAS["rate"]), headers=["量", "值", "迭代", "|梯度|", "状态"]))


@cli.command("check-regime")
@click.option("--beta", type=float, default=None, help="阈值指数β")
@click.option("--gamma", type=float, default=None, help="尺度指数γ (中偏差)")
@click.option("--threshold-c", type=float, default=None, help="阈值系数c")
@click.option("--model", type=click.Path(dir_okay=False), default=None, help="模型文件 (.toml/.json)")
@run_options
@click.pass_context
def check_regime(ctx, beta, gamma, threshold_c, model, seed, workers, out, check, config_file):
    """检查阈值与尺度是否满足大/中偏差条件"""
    try:
        config = RunConfig.from_sources(
            dict(threshold_beta=beta, gamma=gamma, threshold_c=threshold_c, model=model, out=out, check=check),
            config_file,
        )
        regime = config.regime()
        if regime is None:
            raise ValueError("需要 --beta")
        spec = config.load_model()

        reports = [check_ldp(regime, spec)]
        if regime.gamma is not None:
            reports.append(check_mdp(regime, spec))
        support = corroborate(regime)

        records = [
            {
                "kind": report.kind,
                "name": c.name,
                "passed": c.passed,
                "margin": c.margin,
                "approximation": c.approximation,
                "detail": c.detail,
            }
            for report in reports
            for c in report.checks
        ]
        writer = ResultWriter(config.out, config.seed)
        writer.emit(
            "regime",
            records,
            "regime",
            {
                "passed": all(report.passed for report in reports),
                "corroboration": {
                    "n_values": support.n_values,
                    "n_r": support.n_r,
                    "scaled": support.scaled,
                    "n_r_increasing": support.n_r_increasing,
                    "scaled_bounded": support.scaled_bounded,
                },
            },
        )
        writer.finish("check-regime", config.to_dict())
    except EXPECTED_ERRORS as e:
        _fail(ctx, str(e))

    rows = [format_check(c, report.kind) for report in reports for c in report.checks]
    click.echo("\n" + tabulate(rows, headers=["类型", "条件", "判定", "余量", "说明"]))
    for report in reports:
        click.echo(f"{report.kind.upper()}: {'通过' if report.passed else '未通过'}")

    violations = [f"{report.kind} 条件 {name}" for report in reports for name in report.failed()]
    _report_violations(ctx, violations, config.check)


def _run_mode(config: RunConfig, spec: ModelSpec):
    regime = config.regime()
    mode = config.mode
    common = dict(reps=config.reps, seed=config.seed, workers=config.workers)

    if mode == "consistency":
        return run_consistency(spec, regime, config.n_grid, **common)
    if mode == "clt":
        return run_clt(spec, regime, config.n, **common)
    if mode == "ldp":
        event = EventSpec(Statistic.LDP_LEVEL, config.direction, config.level, polarized=config.polarized)
        return ldp_slope(spec, regime, event, config.n_grid, **common)
    if mode == "mdp":
        if regime is None or config.gamma is None:
            raise ValueError("mdp 模式需要 --threshold-beta 与 --gamma")
        event = EventSpec(Statistic.MDP_SCALED, config.direction, config.level, gamma=config.gamma)
        return mdp_slope(spec, regime, event, config.n_grid, **common)
    if mode == "filter":
        if regime is None:
            raise ValueError("filter 模式需要 --threshold-beta")
        return jump_filter_report(spec, regime, config.n, **common)
    if mode == "mgf":
        return run_cgf(spec, config.theta, config.n, gamma=config.gamma, **common)
    raise ValueError(f"未知的实验模式: {mode}")


@cli.command("run-experiment")
@click.option("--mode", type=click.Choice(MODES), default=None, help="实验模式")
@click.option("--model", type=click.Path(dir_okay=False), default=None, help="模型文件 (.toml/.json)")
@click.option("--n", type=int, default=None, help="网格大小")
@click.option("--n-grid", default=None, help="网格大小序列，如 25,50,100")
@click.option("--reps", type=int, default=None, help="路径重复次数")
@click.option("--threshold-c", type=float, default=None, help="阈值系数c")
@click.option("--threshold-beta", type=float, default=None, help="阈值指数β (不给出则不截断)")
@click.option("--gamma", type=float, default=None, help="尺度指数γ (中偏差)")
@click.option("--direction", default=None, help="事件方向 u1,u2,u3")
@click.option("--level", type=float, default=None, help="事件水平a")
@click.option("--theta", default=None, help="累积量函数自变量 θ1,θ2,θ3 (mgf 模式)")
@click.option("--polarized", is_flag=True, help="交叉项改用极化恒等式 (ldp 模式)")
@run_options
@click.pass_context
def run_experiment(
    ctx, mode, model, n, n_grid, reps, threshold_c, threshold_beta, gamma, direction, level, theta,
    polarized, seed, workers, out, check, config_file,
):
    """运行蒙特卡洛/精确参照验证实验"""
    try:
        config = RunConfig.from_sources(
            dict(
                mode=mode, model=model, n=n, n_grid=n_grid, reps=reps, threshold_c=threshold_c,
                threshold_beta=threshold_beta, gamma=gamma, direction=direction, level=level,
                theta=theta, polarized=polarized, seed=seed, workers=workers, out=out, check=check,
            ),
            config_file,
        )
        if config.mode not in MODES:
            raise ValueError(f"需要 --mode (可选: {', '.join(MODES)})")

        report = _run_mode(config, config.load_model())
        records = report.to_records()
        summary = report.summary()

        writer = ResultWriter(config.out, config.seed)
        csv_path = writer.emit(config.mode, records, config.mode, summary)
        writer.finish(config.mode, config.to_dict())
    except EXPECTED_ERRORS as e:
        _fail(ctx, str(e))

    schema = SCHEMAS[config.mode]
    click.echo("\n" + tabulate(format_records(records, schema), headers=schema))
    click.echo(f"输出: {csv_path}")
    _report_violations(ctx, report.violations(), config.check)


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """解析命令行并执行，返回退出码"""
    try:
        result = cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="covol-ldp",
            standalone_mode=False,
        )
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("已中止", err=True)
        return EXIT_ERROR
    return result if isinstance(result, int) else 0
