"""
로깅 설정
- 모든 logger 는 "datasync" 아래에 붙음 (core.lmi -> datasync.core.lmi)
- stdout 은 stdio MCP transport 와 CLI JSON 출력이 쓰므로 로그는 stderr 로만
- DATASYNC_LOG_FILE 지정 시 파일 핸들러 추가
"""

import logging
import sys

from core.config.settings import get_settings

ROOT_LOGGER = "datasync"
_FORMAT = "[%(asctime)s] %(levelname)s | %(name)s | %(message)s"


def _root() -> logging.Logger:
    root = logging.getLogger(ROOT_LOGGER)
    if root.handlers:
        return root

    settings = get_settings()
    level = logging.getLevelName(settings.log_level.upper())
    if not isinstance(level, int):
        level = logging.INFO
    root.setLevel(level)
    root.propagate = False

    formatter = logging.Formatter(_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.log_file is not None:
        settings.log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(settings.log_file, encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)

    # solver 진행 로그는 WARNING 이상만
    logging.getLogger("cvxpy").setLevel(max(level, logging.WARNING))
    return root


def get_logger(name: str) -> logging.Logger:
    _root()
    return logging.getLogger(f"{ROOT_LOGGER}.{name}")
