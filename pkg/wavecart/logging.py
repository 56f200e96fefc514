from rich.console import Console
from rich.status import Status

STAGE_STYLE = "blue bold"
WARNING_STYLE = "dark_orange bold"
ERROR_STYLE = "red bold"


class Logger:
    WIDTH = 120
    def __init__(self, quiet=False, debug=False):
        self.quiet = quiet
        self.debug = debug
        self.warnings = 0
        # stdout belongs to `wavecart report`; everything else goes to stderr
        self.console = Console(stderr=True, markup=False, highlight=False, color_system="256")
        self.progress = None

    def set(self, quiet=None, debug=None):
        if quiet is not None: self.quiet = quiet
        if debug is not None: self.debug = debug

    def stage_message(self, stage, message):
        if self.quiet:
            return
        self.console.print(f"[{stage}]", style=STAGE_STYLE, end=" ")
        self.console.print(message, width=self.WIDTH)

    def warning_message(self, message):
        self.warnings += 1
        if not self.quiet:
            self.console.print(f"WARNING: {message}", style=WARNING_STYLE, width=self.WIDTH)

    def error_message(self, message):
        # Never quieted; one line so scripts can grep it
        self.console.print(f"error: {' '.join(str(message).split())}", style=ERROR_STYLE, soft_wrap=True)

    def debug_message(self, message):
        if self.debug:
            self.console.print(f"DEBUG: {message}", style="dim")

    def start_progress(self, message="..."):
        """Status line for long loops, replaced in place by progress_message"""
        if self.quiet or self.progress is not None:
            return
        self.progress = Status(f"PROGRESS: {message}", console=self.console)
        self.progress.start()
    def stop_progress(self):
        if self.progress is not None:
            self.progress.stop()
            self.progress = None

    def progress_message(self, message):
        if self.progress is not None:
            self.progress.update(f"PROGRESS: {message}")

    def print(self, *args, force=False, **kwargs):
        if not self.quiet or force:
            self.console.print(*args, **kwargs)

logger = Logger()
