from django.contrib import admin
from .models import ScenarioRun, CheckResult


class CheckResultInline(admin.TabularInline):
    model = CheckResult
    extra = 0
    fields = ('suite', 'name', 'passed', 'measured', 'tolerance', 'runtime')
    readonly_fields = fields


@admin.register(ScenarioRun)
class ScenarioRunAdmin(admin.ModelAdmin):
    """
    Admin interface configuration for the ScenarioRun model.
    """
    list_display = (
        'name',
        'background',
        'status',
        'exit_code',
        'final_time',
        'final_length',
        'created'
    )
    search_fields = ('name', 'slug', 'background')
    list_filter = ('status', 'exit_code', 'background')
    ordering = ('-created',)
    readonly_fields = ('config', 'output_prefix')
    date_hierarchy = 'created'
    inlines = [CheckResultInline]


@admin.register(CheckResult)
class CheckResultAdmin(admin.ModelAdmin):
    list_display = (
        'suite',
        'name',
        'passed',
        'measured',
        'tolerance',
        'runtime',
        'created'
    )
    search_fields = ('name', 'run__name')
    list_filter = ('suite', 'passed')
    ordering = ('suite', 'name')
    date_hierarchy = 'created'
