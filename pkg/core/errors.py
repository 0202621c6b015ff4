"""
异常定义 - opnorm 工具箱的统一错误层级

命令层根据异常类型决定退出码：
- 输入/前置条件类错误 -> 1
- SoundnessError（实现检测到可证上界被违反，属于 bug 信号）-> 2
"""
from typing import Optional, Sequence


class OpNormError(Exception):
    """工具箱基础异常"""

    exit_code = 1


class InputError(OpNormError):
    """输入错误：文件格式、维度不匹配、参数越界"""
    pass


class ConvergenceError(OpNormError):
    """特征值求解在迭代上限内未收敛"""

    def __init__(self, message: str, residual: float, sweeps: int):
        super().__init__(f"{message} (residual={residual:.3e}, sweeps={sweeps})")
        self.residual = residual
        self.sweeps = sweeps


class SPDViolationError(OpNormError):
    """矩阵不是对称正定（或半正定）"""

    def __init__(self, message: str, eigenvalues: Optional[Sequence[float]] = None):
        self.eigenvalues = [float(x) for x in (eigenvalues or [])]
        if self.eigenvalues:
            listed = ", ".join(f"{x:.6g}" for x in self.eigenvalues)
            message = f"{message}: [{listed}]"
        super().__init__(message)


class PsdOnlyError(SPDViolationError):
    """半正定分解不能取对数 / 复数幂"""
    pass


class DegenerateInstanceError(OpNormError):
    """归一化时出现零范数，不等式退化为 0 <= 0"""
    pass


class PreconditionError(OpNormError):
    """操作的前置条件不满足"""
    pass


class NormalizationError(PreconditionError):
    """实例未归一化"""
    pass


class SoundnessError(OpNormError):
    """数值结果违反了已证明的不等式，属于实现缺陷信号"""

    exit_code = 2
