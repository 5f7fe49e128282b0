import logging
import json


class JsonMessageFormatter(logging.Formatter):
    """Formatter writing one JSON object per line, with the message JSON-encoded so every line parses"""

    def __init__(self) -> None:
        super().__init__('{"time":"%(asctime)s", "level": "%(levelname)s", "message":%(message)s}')

    def format(self, record: logging.LogRecord) -> str:
        record = logging.makeLogRecord(record.__dict__)
        record.msg = json.dumps(record.getMessage())
        record.args = None
        return super().format(record)


def set_up_logger(filename: str | None = None, level: int = logging.DEBUG) -> logging.Logger:
    logging.getLogger("asyncio").setLevel(logging.WARNING)

    logger = logging.getLogger()
    logger.setLevel(level)
    formatter = JsonMessageFormatter()

    # Re-running an entry point in the same interpreter must not stack handlers
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    if filename:
        file_handler = logging.FileHandler(filename=filename)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    else:
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(formatter)
        logger.addHandler(stream_handler)

    return logger


def log_to_json(fpath: str) -> list[dict]:
    file_logs = []
    with open(fpath, "r") as f:
        with open(f"{fpath}.json", "w") as jf:
            for line in f.readlines():
                if not line.strip():
                    continue
                jline = json.loads(str(line))
                file_logs.append(jline)

            json.dump(file_logs, jf)
    return file_logs
