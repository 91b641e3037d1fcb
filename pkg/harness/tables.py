import django_tables2 as tables
from .models import ScenarioRun, CheckResult


class ScenarioRunTable(tables.Table):
    class Meta:
        model = ScenarioRun
        template_name = "django_tables2/semantic.html"
        fields = (
            'created',
            'name',
            'background',
            'status',
            'exit_code',
            'final_time',
            'final_length',
            'output_prefix'
        )
        order_by_field = 'sort'


class CheckResultTable(tables.Table):
    class Meta:
        model = CheckResult
        template_name = "django_tables2/semantic.html"
        fields = (
            'created',
            'suite',
            'name',
            'passed',
            'measured',
            'tolerance',
            'runtime',
            'run'
        )
        order_by_field = 'sort'
