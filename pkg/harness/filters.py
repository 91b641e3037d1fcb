import django_filters
from .models import ScenarioRun, CheckResult


class ScenarioRunFilter(django_filters.FilterSet):
    name = django_filters.CharFilter(lookup_expr='icontains')

    class Meta:
        model = ScenarioRun
        fields = ['name', 'background', 'status', 'exit_code']


class CheckResultFilter(django_filters.FilterSet):
    class Meta:
        model = CheckResult
        fields = ['suite', 'name', 'passed']
