# handlers/decorators.py
import functools
import logging
import time

import click

from core.errors import DisGNNError

logger = logging.getLogger(__name__)

EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2


def handle_errors(func):
    """도메인 예외/입력 오류를 stderr 메시지 + 종료 코드 2 로 바꾸는 데코레이터"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except DisGNNError as e:
            logger.debug(f"{func.__name__} 실패: {type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            raise SystemExit(EXIT_USAGE)
        except (ValueError, OSError) as e:
            # 서비스의 인자 검증(ValueError)과 파일 입출력 오류
            logger.debug(f"{func.__name__} 입력 오류: {e}")
            click.echo(f"error: {e}", err=True)
            raise SystemExit(EXIT_USAGE)

    return wrapper


def timed(func):
    """서브커맨드 실행 시간을 DEBUG 로 남긴다"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        started = time.perf_counter()
        try:
            return func(*args, **kwargs)
        finally:
            elapsed = (time.perf_counter() - started) * 1000.0
            logger.debug(f"⏱️ {func.__name__}: {elapsed:.1f} ms")

    return wrapper
