from .config import Config
from .errors import (
    CapacityError,
    DomainError,
    LayoutError,
    PbspError,
    UsageError,
    VerificationError,
)
from .formatting import (
    format_section_header,
    format_number,
    format_verdict,
    format_interval,
    now_local,
    format_datetime,
    render_csv,
    render_json,
    format_summary,
)
