import logging
from dataclasses import dataclass


@dataclass(frozen=True)
class StepResult:
    name: str
    passed: bool
    detail: str = ""


def run_procedure(procedure, args):
    """Run every step even after a failure; each step's outcome lands in context["results"]."""
    context = {"args": args, "results": []}
    for step in procedure:
        step_name = step.__class__.__name__
        try:
            logging.info(f"==> Running step: {step_name}")
            detail = step.run(context)
            context["results"].append(StepResult(step_name, True, detail or ""))
        except Exception as e:
            logging.exception(f"Failure in step {step_name}")
            context["results"].append(StepResult(step_name, False, str(e)))
    return context
