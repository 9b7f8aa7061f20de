import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Union

from jinja2 import Environment, FileSystemLoader, TemplateNotFound, select_autoescape

logger = logging.getLogger(__name__)

# Initialize Jinja2 environment
env = Environment(
    loader=FileSystemLoader(os.path.dirname(__file__)),
    autoescape=select_autoescape(),
    trim_blocks=True,
    lstrip_blocks=True,
)


#渲染报告模版
def render_report(template_name: str, **variables: Any) -> str:
    try:
        template = env.get_template(f"{template_name}.md")
    except TemplateNotFound as e:
        raise ValueError(f"Report template {template_name!r} not found") from e
    return template.render(GENERATED_AT=datetime.now().strftime("%a %b %d %Y %H:%M:%S"), **variables)


def write_run_summary(path: Union[str, Path], **variables: Any) -> Path:
    """Render ``summary.md`` for a finished pre-training run and write it next to the checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_report("summary", **variables), encoding="utf-8")
    logger.info("Wrote run summary to %s", path)
    return path
