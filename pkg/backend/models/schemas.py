"""数据模型定义

复数统一序列化为 [re, im]，矩阵为按行排列的复数数组。
"""

import cmath
from enum import StrEnum
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    field_validator,
    model_validator,
)

SCHEMA_VERSION = "1"


def _to_complex(value: Any) -> complex:
    if isinstance(value, bool):
        raise ValueError("复数不能是布尔值")
    if isinstance(value, int | float | complex | np.number):
        z = complex(value)
    elif isinstance(value, list | tuple) and len(value) == 2:
        z = complex(float(value[0]), float(value[1]))
    else:
        raise ValueError("复数必须写成 [re, im]")
    if not cmath.isfinite(z):
        raise ValueError("复数必须有限")
    return z


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


Complex = Annotated[
    complex,
    PlainValidator(_to_complex),
    PlainSerializer(_complex_pair, return_type=list[float]),
]

MatrixData = list[list[Complex]]


def matrix_to_array(rows: MatrixData) -> np.ndarray:
    """嵌套列表转 complex128 数组"""
    return np.array(rows, dtype=np.complex128)


def array_to_matrix(arr: np.ndarray) -> MatrixData:
    """complex128 数组转嵌套列表"""
    return [[complex(x) for x in row] for row in np.asarray(arr, dtype=np.complex128)]


# ---------------------------------------------------------------------------
# 矩阵与对称点
# ---------------------------------------------------------------------------


class CMatrix(BaseModel):
    """2×2 或 3×3 复矩阵"""

    n: Literal[2, 3]
    entries: MatrixData

    @model_validator(mode="after")
    def _check_shape(self) -> "CMatrix":
        if len(self.entries) != self.n or any(len(row) != self.n for row in self.entries):
            raise ValueError(f"矩阵必须是 {self.n}×{self.n}")
        return self

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "CMatrix":
        arr = np.asarray(arr, dtype=np.complex128)
        return cls(n=arr.shape[0], entries=array_to_matrix(arr))

    def to_array(self) -> np.ndarray:
        return matrix_to_array(self.entries)


class SymPoint(BaseModel):
    """C^n 中的点 (σ₁, …, σ_n)"""

    n: Literal[2, 3]
    s: list[Complex]

    @model_validator(mode="after")
    def _check_length(self) -> "SymPoint":
        if len(self.s) != self.n:
            raise ValueError(f"对称点长度必须为 {self.n}")
        return self

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "SymPoint":
        values = [complex(x) for x in np.asarray(arr, dtype=np.complex128)]
        return cls(n=len(values), s=values)


class MatrixClassTag(StrEnum):
    """矩阵类别"""

    SCALAR = "scalar"
    NONCYCLIC = "noncyclic"  # 非循环非标量，仅 n=3
    CYCLIC = "cyclic"


class MatrixClass(BaseModel):
    """分类结果：λ 为重特征值，μ 为剩余特征值"""

    tag: MatrixClassTag
    lam: Complex | None = None
    mu: Complex | None = None


class SCFCase(StrEnum):
    """Carathéodory–Fejér 问题归一化后的情形"""

    ZERO_B_CYCLIC = "ZeroBase_Bcyclic"
    ZERO_B_SCALAR_N2 = "ZeroBase_Bscalar_n2"
    ZERO_B_SCALAR_N3 = "ZeroBase_Bscalar_n3"
    ZERO_B_NONCYCLIC_N3 = "ZeroBase_Bnoncyclic_n3"
    AMU_GENERIC = "AmuBase_generic"
    AMU_SPECIAL = "AmuBase_special"
    AMU_DEGENERATE = "AmuBase_degenerate"
    CYCLIC_UNSUPPORTED = "CyclicBase_unsupported"


class SCFReduction(BaseModel):
    """归一化记录：(A, B) 经这些变换化为 (base_A, base_B)"""

    case: SCFCase
    mobius_lam: Complex = 0j
    similarity: MatrixData | None = None
    commutator: MatrixData | None = None
    transposed: bool = False
    base_A: MatrixData
    base_B: MatrixData
    degenerate: bool = False


class MembershipReport(BaseModel):
    """区域隶属报告"""

    inside: bool
    margin: float
    method: str
    boundary: bool = False


# ---------------------------------------------------------------------------
# 多项式与全纯表达式
# ---------------------------------------------------------------------------


class Poly(BaseModel):
    """多项式，系数按升幂排列"""

    model_config = ConfigDict(frozen=True)

    coeffs: list[Complex] = Field(default_factory=lambda: [0j])

    @field_validator("coeffs", mode="after")
    @classmethod
    def _trim(cls, coeffs: list[complex]) -> list[complex]:
        coeffs = list(coeffs) or [0j]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        return coeffs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def to_array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.complex128)

    @classmethod
    def from_array(cls, arr: Any) -> "Poly":
        return cls(coeffs=[complex(c) for c in np.atleast_1d(np.asarray(arr, dtype=np.complex128))])

    def __call__(self, z: Any) -> Any:
        return np.polynomial.polynomial.polyval(z, self.to_array())


class HoloNode(BaseModel):
    """表达式树节点基类，提供 + - * 运算"""

    model_config = ConfigDict(frozen=True)

    def __add__(self, other: Any) -> "Add":
        left = self.terms if isinstance(self, Add) else [self]
        right = other.terms if isinstance(other, Add) else [as_expr(other)]
        return Add(terms=[*left, *right])

    def __radd__(self, other: Any) -> "Add":
        return as_expr(other) + self

    def __sub__(self, other: Any) -> "Add":
        return self + (-as_expr(other))

    def __rsub__(self, other: Any) -> "Add":
        return as_expr(other) + (-self)

    def __mul__(self, other: Any) -> "Mul":
        left = self.factors if isinstance(self, Mul) else [self]
        right = other.factors if isinstance(other, Mul) else [as_expr(other)]
        return Mul(factors=[*left, *right])

    def __rmul__(self, other: Any) -> "Mul":
        return as_expr(other) * self

    def __neg__(self) -> "HoloNode":
        if isinstance(self, Neg):
            return self.arg
        if isinstance(self, Constant):
            return Constant(value=-self.value)
        return Neg(arg=self)


class Constant(HoloNode):
    kind: Literal["const"] = "const"
    value: Complex


class Monomial(HoloNode):
    """ζ^k"""

    kind: Literal["monomial"] = "monomial"
    power: int = Field(ge=0)


class PolyNode(HoloNode):
    kind: Literal["poly"] = "poly"
    poly: Poly


class ExpNode(HoloNode):
    kind: Literal["exp"] = "exp"
    arg: "HoloExpr"


class Add(HoloNode):
    kind: Literal["add"] = "add"
    terms: list["HoloExpr"]


class Mul(HoloNode):
    kind: Literal["mul"] = "mul"
    factors: list["HoloExpr"]


class Neg(HoloNode):
    kind: Literal["neg"] = "neg"
    arg: "HoloExpr"


class Singularity(BaseModel):
    """分母在闭单位圆盘（或整个平面）内的零点及其阶"""

    model_config = ConfigDict(frozen=True)

    point: Complex
    order: int = Field(ge=1)


class Div(HoloNode):
    """可去奇点的商，singularities 列出分母的全部零点"""

    kind: Literal["div"] = "div"
    numer: "HoloExpr"
    denom: "HoloExpr"
    singularities: list[Singularity] = Field(default_factory=list)
    label: str = ""


HoloExpr = Annotated[
    Constant | Monomial | PolyNode | ExpNode | Add | Mul | Neg | Div,
    Field(discriminator="kind"),
]

for _model in (ExpNode, Add, Mul, Neg, Div):
    _model.model_rebuild()


def as_expr(value: Any) -> HoloNode:
    """把数、Poly 或节点统一成表达式节点"""
    if isinstance(value, HoloNode):
        return value
    if isinstance(value, Poly):
        return PolyNode(poly=value)
    if isinstance(value, int | float | complex | np.number):
        return Constant(value=complex(value))
    raise TypeError(f"无法转换为表达式: {type(value).__name__}")


# ---------------------------------------------------------------------------
# 提升映射
# ---------------------------------------------------------------------------


class ExpLinearFactor(BaseModel):
    """M ↦ e^{−wζX}·M·e^{wζX}"""

    kind: Literal["exp_linear"] = "exp_linear"
    matrix: CMatrix
    weight: float = 1.0


class ExpPolyFactor(BaseModel):
    """M ↦ e^{−F(ζ)}·M·e^{F(ζ)}，F 为多项式矩阵"""

    kind: Literal["exp_poly"] = "exp_poly"
    entries: list[list[Poly]]


class SimilarityFactor(BaseModel):
    """M ↦ S⁻¹·M·S"""

    kind: Literal["similarity"] = "similarity"
    matrix: CMatrix


class TransposeFactor(BaseModel):
    kind: Literal["transpose"] = "transpose"


class MobiusFactor(BaseModel):
    """M ↦ Φ_λ(M) = (M − λI)(I − λ̄M)⁻¹"""

    kind: Literal["mobius"] = "mobius"
    lam: Complex


ConjFactor = Annotated[
    ExpLinearFactor | ExpPolyFactor | SimilarityFactor | TransposeFactor | MobiusFactor,
    Field(discriminator="kind"),
]


class DiscMap(BaseModel):
    """构造出的 ψ：核心矩阵 + 共轭链（按顺序作用）"""

    schema_version: str = SCHEMA_VERSION
    n: Literal[2, 3]
    entries: list[list[HoloExpr]]
    conj_chain: list[ConjFactor] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_shape(self) -> "DiscMap":
        if len(self.entries) != self.n or any(len(row) != self.n for row in self.entries):
            raise ValueError(f"DiscMap 必须是 {self.n}×{self.n}")
        return self


# ---------------------------------------------------------------------------
# 报告与证书
# ---------------------------------------------------------------------------


class ConditionItem(BaseModel):
    """单个条件的检查结果"""

    model_config = ConfigDict(populate_by_name=True)

    label: str
    point: Complex
    node: int | None = None
    lhs: Complex
    rhs: Complex
    residual: float
    passed: bool = Field(alias="pass")


class ConditionReport(BaseModel):
    """条件检查报告"""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = SCHEMA_VERSION
    case: str | None = None
    items: list[ConditionItem]
    tol: float
    passed: bool = Field(alias="pass")
    notes: list[str] = Field(default_factory=list)

    def failed_labels(self) -> list[str]:
        return [item.label for item in self.items if not item.passed]


class VerifyConfig(BaseModel):
    """验证配置"""

    tol: float = Field(default=1e-9, gt=0)
    deriv_tol: float = Field(default=1e-8, gt=0)
    grid_radii: int = Field(default=8, ge=1)
    grid_angles: int = Field(default=32, ge=4)
    max_radius: float = Field(default=0.95, gt=0, lt=1)
    quad_radius: float = Field(default=0.5, gt=0, lt=1)
    quad_samples: int = Field(default=256, ge=8)
    bound_cap: float = Field(default=1e6, gt=0)
    seed: int | None = None


class GridSpec(BaseModel):
    radii: list[float]
    angles: int


class CheckRecord(BaseModel):
    """证书中的单项检查"""

    model_config = ConfigDict(populate_by_name=True)

    name: str
    max_residual: float
    threshold: float
    passed: bool = Field(alias="pass")


class Certificate(BaseModel):
    """数值验证证书"""

    model_config = ConfigDict(populate_by_name=True)

    schema_version: str = SCHEMA_VERSION
    kind: Literal["snp", "scf"]
    grid: GridSpec
    checks: list[CheckRecord]
    passed: bool = Field(alias="pass")
    config: VerifyConfig
    inputs_hash: str

    def check(self, name: str) -> CheckRecord:
        for record in self.checks:
            if record.name == name:
                return record
        raise KeyError(name)


class NecessityReport(BaseModel):
    """必要性检验报告"""

    label: str
    magnitude: float
    targeted_residual: float
    checker_failed: list[str]
    construction_error: str | None = None
    expected: bool


# ---------------------------------------------------------------------------
# 问题文件
# ---------------------------------------------------------------------------


class SNPNode(BaseModel):
    alpha: Complex
    matrix: MatrixData


class SCFPair(BaseModel):
    A: MatrixData
    B: MatrixData


class PhiData(BaseModel):
    """φ 的各分量，升幂系数"""

    components: list[list[Complex]]


class GridConfig(BaseModel):
    radii: int = Field(default=8, ge=1)
    angles: int = Field(default=32, ge=4)


class ProblemConfig(BaseModel):
    tol: float | None = Field(default=None, gt=0)
    grid: GridConfig | None = None
    degree: int | None = Field(default=None, ge=0)
    seed: int | None = None


class ProblemFile(BaseModel):
    """问题文件"""

    schema_version: str = SCHEMA_VERSION
    kind: Literal["snp", "scf"]
    n: Literal[2, 3]
    stratum: str | None = None
    nodes: list[SNPNode] | None = None
    pair: SCFPair | None = None
    phi: PhiData | None = None
    config: ProblemConfig | None = None

    @model_validator(mode="after")
    def _check_consistency(self) -> "ProblemFile":
        if self.kind == "snp":
            if not self.nodes:
                raise ValueError("snp 问题必须给出 nodes")
            for node in self.nodes:
                _check_square(node.matrix, self.n)
                if abs(node.alpha) >= 1:
                    raise ValueError(f"节点 {node.alpha} 不在单位圆盘内")
        else:
            if self.pair is None:
                raise ValueError("scf 问题必须给出 pair")
            _check_square(self.pair.A, self.n)
            _check_square(self.pair.B, self.n)
        if self.phi is not None and len(self.phi.components) != self.n:
            raise ValueError(f"φ 必须有 {self.n} 个分量")
        return self


def _check_square(rows: MatrixData, n: int) -> None:
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ValueError(f"矩阵必须是 {n}×{n}")
