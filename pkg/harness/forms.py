import json
import logging
from pathlib import Path

from django import forms
from django.conf import settings

from flow.exceptions import FlowError
from flow.initializers import INITIALIZERS, build_curve
from geometry.backgrounds import Family, resolve_background
from geometry.exceptions import GeometryError

from .exceptions import ScenarioError
from .scenario import (
    DIRECT_CHECKS,
    FIXED_PARAMETER_CHECKS,
    RAMP_CHECKS,
    SCENARIO_CHECKS,
    SCHEMA_VERSION,
    ScenarioConfig,
)

logger = logging.getLogger(__name__)

# JSON keys that differ from the field names.
KEY_ALIASES = {'lambda': 'lam'}
JSON_FIELDS = ('curve', 'interval', 'checks', 'family')


class ScenarioConfigForm(forms.Form):
    """
    Validates one scenario document.

    Nested values (``curve``, ``interval``, ``checks``, ``family``) arrive as JSON
    text, the way a JSONField reads them. Every referenced name must
    resolve: the background, the curve initializer and its parameters,
    and each check.
    """
    version = forms.ChoiceField(choices=[(SCHEMA_VERSION, SCHEMA_VERSION)])
    name = forms.SlugField(max_length=100)
    background = forms.CharField(max_length=60)
    curve = forms.JSONField()
    lam = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    interval = forms.JSONField()
    N = forms.IntegerField(min_value=16)
    cfl = forms.FloatField(required=False, min_value=0.0)
    dt = forms.FloatField(required=False, min_value=0.0)
    checks = forms.JSONField(required=False)
    output = forms.CharField(required=False, max_length=255)
    seed = forms.IntegerField(required=False, min_value=0)
    samples = forms.IntegerField(required=False, min_value=2)
    redistribute = forms.NullBooleanField(required=False)
    polygon = forms.IntegerField(required=False, min_value=3)
    snapshot_stride = forms.IntegerField(required=False, min_value=0)
    family = forms.JSONField(required=False)

    def clean_background(self):
        name = self.cleaned_data['background']
        try:
            self.resolved_background = resolve_background(name)
        except GeometryError as exc:
            raise forms.ValidationError(str(exc))
        return name

    def clean_curve(self):
        curve = self.cleaned_data['curve']
        if not isinstance(curve, dict) or curve.get('kind') not in INITIALIZERS:
            raise forms.ValidationError(
                f'Curve must be an object whose "kind" is one of {", ".join(INITIALIZERS)}'
            )
        return curve

    def clean_family(self):
        family = self.cleaned_data.get('family') or []
        if not isinstance(family, list) or not all(
                isinstance(spec, dict) and spec.get('kind') in INITIALIZERS for spec in family):
            raise forms.ValidationError('Family must be a list of curve objects with a known "kind"')
        return tuple(family)

    def clean_lam(self):
        lam = self.cleaned_data.get('lam')
        if lam is not None and not 0.0 < lam < 1.0:
            raise forms.ValidationError(f'lambda must lie in (0, 1), got {lam}')
        return lam

    def clean_interval(self):
        interval = self.cleaned_data['interval']
        if (not isinstance(interval, list) or len(interval) != 2
                or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in interval)):
            raise forms.ValidationError('Interval must be a pair [t0, t1] of numbers')
        t0, t1 = (float(t) for t in interval)
        if not t1 > t0:
            raise forms.ValidationError(f'Interval end {t1} must follow its start {t0}')
        return (t0, t1)

    def clean_cfl(self):
        cfl = self.cleaned_data.get('cfl')
        if cfl is not None and cfl <= 0:
            raise forms.ValidationError('cfl must be positive')
        return cfl

    def clean_checks(self):
        checks = self.cleaned_data.get('checks') or []
        if not isinstance(checks, list):
            raise forms.ValidationError('Checks must be a list of names')
        unknown = [name for name in checks if name not in SCENARIO_CHECKS]
        if unknown:
            raise forms.ValidationError(f'Unknown checks: {", ".join(map(str, unknown))}')
        return tuple(checks)

    def clean(self):
        cleaned_data = super().clean()
        bg = getattr(self, 'resolved_background', None)
        interval = cleaned_data.get('interval')
        if bg is None or interval is None:
            return cleaned_data

        t0, t1 = interval
        if not (bg.contains_time(t0) and bg.contains_time(t1)):
            self.add_error('interval', f'[{t0:g}, {t1:g}] leaves the domain {bg.t_domain} of {bg.name}')

        lam = cleaned_data.get('lam')
        checks = cleaned_data.get('checks') or ()
        redistribute = cleaned_data.get('redistribute')
        if lam is not None and bg.dim != 3:
            self.add_error('lam', f'Ramps need a 3-dimensional background, {bg.name} has dimension {bg.dim}')
        if lam is None and any(name in RAMP_CHECKS for name in checks):
            self.add_error('checks', 'Ramp checks need a lambda')
        if lam is not None and any(name in DIRECT_CHECKS for name in checks):
            self.add_error('checks', 'circle_length_oracle applies to the direct flow only')
        if redistribute is not False and any(name in FIXED_PARAMETER_CHECKS for name in checks):
            self.add_error('checks', 'Fixed-parameter identities need "redistribute": false')

        curve = cleaned_data.get('curve')
        N = cleaned_data.get('N')
        if curve is not None and N is not None:
            if 'circle_length_oracle' in checks and (curve['kind'] != 'circle' or bg.family != Family.FLAT_TORUS3):
                self.add_error('checks', 'circle_length_oracle needs a circle in t3_flat')
            try:
                build_curve(curve, bg, N, cleaned_data.get('seed') or 0)
            except (FlowError, GeometryError) as exc:
                self.add_error('curve', str(exc))

        family = cleaned_data.get('family') or ()
        if family and lam is None:
            self.add_error('family', 'A family is deformed as ramps and needs a lambda')
        for index, spec in enumerate(family if N is not None else ()):
            try:
                build_curve(spec, bg, N, cleaned_data.get('seed') or 0)
            except (FlowError, GeometryError) as exc:
                self.add_error('family', f'member {index}: {exc}')
        return cleaned_data

    def to_config(self):
        data = self.cleaned_data
        return ScenarioConfig(
            version=data['version'],
            name=data['name'],
            background=data['background'],
            curve=data['curve'],
            interval=data['interval'],
            N=data['N'],
            lam=data.get('lam'),
            cfl=data.get('cfl'),
            dt=data.get('dt'),
            checks=data.get('checks') or (),
            output=data.get('output') or '',
            seed=data.get('seed') or 0,
            samples=data.get('samples'),
            redistribute=data.get('redistribute') is not False,
            polygon=data.get('polygon'),
            snapshot_stride=data.get('snapshot_stride'),
            family=data.get('family') or (),
        )


def _form_data(document):
    if not isinstance(document, dict):
        raise ScenarioError('A scenario must be a JSON object')
    data = {}
    for key, value in document.items():
        field = KEY_ALIASES.get(key, key)
        if field not in ScenarioConfigForm.base_fields or (field in KEY_ALIASES.values() and key == field):
            raise ScenarioError(f'Unknown scenario key "{key}"')
        data[field] = json.dumps(value) if field in JSON_FIELDS else value
    return data


def parse_scenario(document):
    """Validate a decoded scenario document into a ScenarioConfig; ScenarioError otherwise."""
    form = ScenarioConfigForm(data=_form_data(document))
    if not form.is_valid():
        errors = '; '.join(
            f'{field}: {" ".join(messages)}' for field, messages in form.errors.items()
        )
        logger.error(f'Invalid scenario: {errors}')
        raise ScenarioError(errors)
    return form.to_config()


def load_scenario(path):
    """
    Read and validate a scenario file.

    Relative paths that do not exist are looked up in
    ``EXTLAB['SCENARIO_DIR']``, with or without the ``.json`` suffix.
    """
    path = Path(path)
    candidates = [path]
    if not path.is_absolute():
        base = Path(settings.EXTLAB['SCENARIO_DIR'])
        candidates += [base / path, base / f'{path}.json']
    for candidate in candidates:
        if candidate.is_file():
            try:
                document = json.loads(candidate.read_text(encoding='utf-8'))
            except json.JSONDecodeError as exc:
                raise ScenarioError(f'{candidate}: {exc}')
            return parse_scenario(document)
    raise ScenarioError(f'No scenario file at {path}')
