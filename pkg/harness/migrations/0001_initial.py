# Generated by Django 5.1.4 on 2026-10-19 09:12

import django.db.models.deletion
import django.utils.timezone
import django_extensions.db.fields
import model_utils.fields
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ScenarioRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created', model_utils.fields.AutoCreatedField(default=django.utils.timezone.now, editable=False, verbose_name='created')),
                ('modified', model_utils.fields.AutoLastModifiedField(default=django.utils.timezone.now, editable=False, verbose_name='modified')),
                ('name', models.CharField(max_length=100)),
                ('slug', django_extensions.db.fields.AutoSlugField(blank=True, editable=False, populate_from='name', unique=True)),
                ('background', models.CharField(max_length=60)),
                ('config', models.JSONField(default=dict)),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('curvature_blowup', 'Curvature blow-up'), ('extinct_short', 'Extinct (short)'), ('failed', 'Failed')], default='completed', max_length=20)),
                ('exit_code', models.PositiveSmallIntegerField(default=0)),
                ('final_time', models.FloatField(blank=True, null=True)),
                ('final_length', models.FloatField(blank=True, null=True)),
                ('output_prefix', models.CharField(blank=True, max_length=255)),
            ],
            options={
                'verbose_name': 'Scenario Run',
                'verbose_name_plural': 'Scenario Runs',
                'db_table': 'scenario_runs',
                'ordering': ['-created'],
            },
        ),
        migrations.CreateModel(
            name='CheckResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created', model_utils.fields.AutoCreatedField(default=django.utils.timezone.now, editable=False, verbose_name='created')),
                ('modified', model_utils.fields.AutoLastModifiedField(default=django.utils.timezone.now, editable=False, verbose_name='modified')),
                ('suite', models.CharField(choices=[('geometry', 'Geometry'), ('csf', 'Curve shortening'), ('ramp', 'Ramps'), ('comparison', 'Comparison'), ('harness', 'Harness'), ('scenario', 'Scenario')], max_length=20)),
                ('name', models.CharField(max_length=100)),
                ('passed', models.BooleanField(default=False)),
                ('measured', models.FloatField(blank=True, null=True)),
                ('tolerance', models.FloatField(blank=True, null=True)),
                ('runtime', models.FloatField(default=0.0, help_text='Seconds')),
                ('run', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.CASCADE, related_name='checks', to='harness.scenariorun')),
            ],
            options={
                'verbose_name': 'Check Result',
                'verbose_name_plural': 'Check Results',
                'db_table': 'check_results',
                'ordering': ['suite', 'name'],
            },
        ),
    ]
