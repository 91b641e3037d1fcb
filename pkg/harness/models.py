from django.db import models
from django_extensions.db.fields import AutoSlugField
from model_utils.models import TimeStampedModel

STATUS_CHOICES = [
    ("completed", "Completed"),
    ("curvature_blowup", "Curvature blow-up"),
    ("extinct_short", "Extinct (short)"),
    ("failed", "Failed"),
]

SUITE_CHOICES = [
    ("geometry", "Geometry"),
    ("csf", "Curve shortening"),
    ("ramp", "Ramps"),
    ("comparison", "Comparison"),
    ("harness", "Harness"),
    ("scenario", "Scenario"),
]


class ScenarioRun(TimeStampedModel):
    """
    One execution of a scenario config.

    Attributes:
        name (str): Scenario name from the config.
        slug (str): Unique slug based on the name.
        background (str): Catalog name of the background.
        config (dict): The validated config as run.
        status (str): Final status of the flow.
        exit_code (int): 0 success, 1 invariant violation or failed check.
        final_time (float): Time of the last recorded sample.
        final_length (float): Length of the last recorded (projected) loop.
        output_prefix (str): Where the exported files were written.
    """

    name = models.CharField(max_length=100)
    slug = AutoSlugField(unique=True, populate_from='name')
    background = models.CharField(max_length=60)
    config = models.JSONField(default=dict)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default="completed")
    exit_code = models.PositiveSmallIntegerField(default=0)
    final_time = models.FloatField(blank=True, null=True)
    final_length = models.FloatField(blank=True, null=True)
    output_prefix = models.CharField(max_length=255, blank=True)

    class Meta:
        db_table = "scenario_runs"
        verbose_name = "Scenario Run"
        verbose_name_plural = "Scenario Runs"
        ordering = ["-created"]

    def __str__(self):
        return f"{self.name} ({self.status})"


class CheckResult(TimeStampedModel):
    """A named check with its measured value, tolerance and wall-clock runtime."""

    suite = models.CharField(max_length=20, choices=SUITE_CHOICES)
    name = models.CharField(max_length=100)
    passed = models.BooleanField(default=False)
    measured = models.FloatField(blank=True, null=True)
    tolerance = models.FloatField(blank=True, null=True)
    runtime = models.FloatField(default=0.0, help_text='Seconds')
    run = models.ForeignKey(
        ScenarioRun,
        on_delete=models.CASCADE,
        blank=True,
        null=True,
        related_name='checks'
    )

    class Meta:
        db_table = "check_results"
        verbose_name = "Check Result"
        verbose_name_plural = "Check Results"
        ordering = ["suite", "name"]

    def __str__(self):
        return f"{self.suite}.{self.name}: {'pass' if self.passed else 'fail'}"
