# core/errors.py
"""프로젝트 공통 예외"""


class DisGNNError(Exception):
    """모든 도메인 예외의 기반 클래스"""


class InvalidPointCloudError(DisGNNError, ValueError):
    pass


class InvalidTransformError(DisGNNError, ValueError):
    pass


class ConfigurationError(DisGNNError, ValueError):
    """RefinementConfig / ModelConfig / LayerSpec 값 오류"""


class MemoryGuardError(DisGNNError):
    def __init__(self, n: int, k: int, limit: int):
        self.n, self.k, self.limit = n, k, limit
        super().__init__(
            f"{n}^{k} = {n ** k} tuples exceeds the configured cap of {limit} "
            f"(raise DISGNN_MAX_TUPLES to override)"
        )


class XyzParseError(DisGNNError, ValueError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class CounterexampleSearchError(DisGNNError):
    """부분집합 탐색 결과가 기대(유일성, 종류 수)와 다를 때"""
