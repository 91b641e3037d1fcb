# Authentication and permissions
from django.contrib.auth.mixins import LoginRequiredMixin

# Third-party packages
from django_filters.views import FilterView
from django_tables2 import SingleTableMixin
from django_tables2.export.views import ExportMixin

# Local app imports
from .filters import ScenarioRunFilter, CheckResultFilter
from .models import ScenarioRun, CheckResult
from .tables import ScenarioRunTable, CheckResultTable


class ScenarioRunListView(LoginRequiredMixin, ExportMixin, SingleTableMixin, FilterView):
    """
    Recorded scenario runs, filterable and exportable as CSV or JSON
    with ``?_export=csv``.
    """
    model = ScenarioRun
    table_class = ScenarioRunTable
    filterset_class = ScenarioRunFilter
    template_name = 'harness/run_list.html'
    context_object_name = 'runs'
    paginate_by = 25
    export_name = 'scenario_runs'
    export_formats = ('csv', 'json')


class CheckResultListView(LoginRequiredMixin, ExportMixin, SingleTableMixin, FilterView):
    """View for listing recorded checks."""
    model = CheckResult
    table_class = CheckResultTable
    filterset_class = CheckResultFilter
    template_name = 'harness/check_list.html'
    context_object_name = 'checks'
    paginate_by = 25
    export_name = 'check_results'
    export_formats = ('csv', 'json')

    def get_queryset(self):
        return super().get_queryset().select_related('run')
