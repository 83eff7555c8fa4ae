import math

from rest_framework import serializers

from numerics.caputo import INTERP_RULES
from numerics.exceptions import DomainError
from numerics.green import KernelParams

from .conditions import EXAMPLE_PARAMS, example_problem
from .exceptions import ExpressionError
from .expressions import compile_expr, parse_expr
from .problem import ProblemConfig, ProblemSpec

# argument names each problem function is compiled over
FUNCTION_ARGUMENTS = {
    'f': ('t', 'x'),
    'q': ('t',),
    'u': ('x',),
    'v': ('x',),
    'gamma': ('r',),
}

MIN_GRID_SIZE = 9


def format_float(value):
    """17 significant digits, lowercase scientific; None and NaN print as nan."""
    if value is None:
        return "nan"
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".16e")


class SciFloatField(serializers.Field):
    """Read-only float rendered with format_float."""

    def __init__(self, **kwargs):
        kwargs['read_only'] = True
        super().__init__(**kwargs)

    def to_representation(self, value):
        return format_float(value)


class FiniteFloatField(serializers.FloatField):
    default_error_messages = {
        'not_finite': 'A finite number is required.',
    }

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not math.isfinite(value):
            self.fail('not_finite')
        return value


# --- input ------------------------------------------------------------------

class SolverSerializer(serializers.Serializer):
    grid_size = serializers.IntegerField(min_value=MIN_GRID_SIZE, required=False)
    tol = FiniteFloatField(required=False)
    damping = FiniteFloatField(required=False)
    m_schedule = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False, allow_empty=False)
    interp = serializers.ChoiceField(choices=INTERP_RULES, required=False)

    def validate_tol(self, value):
        if value <= 0:
            raise serializers.ValidationError("tol must be positive")
        return value

    def validate_damping(self, value):
        if not 0 < value <= 1:
            raise serializers.ValidationError("damping must lie in (0, 1]")
        return value

    def validate_m_schedule(self, value):
        if any(b <= a for a, b in zip(value, value[1:])):
            raise serializers.ValidationError("m_schedule must be strictly increasing")
        return value


class OutputSerializer(serializers.Serializer):
    dir = serializers.CharField(required=False, allow_blank=False)
    format = serializers.ChoiceField(choices=('csv', 'json'), default='csv')


class FunctionsSerializer(serializers.Serializer):
    f = serializers.CharField()
    q = serializers.CharField()
    u = serializers.CharField()
    v = serializers.CharField()
    gamma = serializers.CharField()


class ProblemConfigSerializer(serializers.Serializer):
    """
    A problem file. family "example" takes `lambda`; family "custom" takes
    expression strings for f, q, u, v and gamma plus named constants.
    """
    family = serializers.ChoiceField(choices=('example', 'custom'))
    mu = FiniteFloatField(default=EXAMPLE_PARAMS.mu)
    omega = FiniteFloatField(default=EXAMPLE_PARAMS.omega)
    R = FiniteFloatField()
    constants = serializers.DictField(child=FiniteFloatField(), default=dict)
    functions = FunctionsSerializer(required=False)
    solver = SolverSerializer(default=dict)
    output = OutputSerializer(default=dict)

    def get_fields(self):
        fields = super().get_fields()
        # a reserved word in Python, so it cannot be declared on the class
        fields['lambda'] = FiniteFloatField(required=False)
        return fields

    def validate_mu(self, value):
        if not 1 < value <= 2:
            raise serializers.ValidationError("mu must lie in (1, 2]")
        return value

    def validate_omega(self, value):
        if value <= 0:
            raise serializers.ValidationError("omega must be positive")
        return value

    def validate_R(self, value):
        if value <= 0:
            raise serializers.ValidationError("R must be positive")
        return value

    def validate(self, attrs):
        family = attrs['family']
        if family == 'example':
            if 'lambda' not in attrs:
                raise serializers.ValidationError({'lambda': "required for family 'example'"})
            if attrs['lambda'] <= 0:
                raise serializers.ValidationError({'lambda': "must be positive"})
            if 'functions' in attrs:
                raise serializers.ValidationError({'functions': "not allowed for family 'example'"})
            return attrs

        if 'functions' not in attrs:
            raise serializers.ValidationError({'functions': "required for family 'custom'"})
        if 'lambda' in attrs:
            raise serializers.ValidationError({'lambda': "only used by family 'example'; put it in constants"})
        clash = set(attrs['constants']) & {'t', 'x', 'r', 'c'}
        if clash:
            raise serializers.ValidationError({'constants': f"names shadow variables: {', '.join(sorted(clash))}"})

        parsed = {}
        errors = {}
        for name, src in attrs['functions'].items():
            try:
                parsed[name] = parse_expr(src, variables=FUNCTION_ARGUMENTS[name], constants=attrs['constants'])
            except ExpressionError as exc:
                errors[name] = str(exc)
        if errors:
            raise serializers.ValidationError({'functions': errors})
        attrs['expressions'] = parsed
        return attrs

    def create(self, validated_data):
        try:
            params = KernelParams(validated_data['mu'], validated_data['omega'])
        except DomainError as exc:
            raise serializers.ValidationError(str(exc)) from exc
        R = validated_data['R']

        if validated_data['family'] == 'example':
            problem = example_problem(validated_data['lambda'], R, params)
        else:
            constants = validated_data['constants']
            fns = {
                name: compile_expr(expr, params, constants, FUNCTION_ARGUMENTS[name])
                for name, expr in validated_data['expressions'].items()
            }
            problem = ProblemSpec(params=params, R=R, label="custom", **fns)

        return ProblemConfig(
            problem=problem,
            solver=dict(validated_data['solver']),
            output=dict(validated_data['output']),
            family=validated_data['family'],
        )


# --- reports ----------------------------------------------------------------

class CheckSerializer(serializers.Serializer):
    passed = serializers.BooleanField(read_only=True)
    margin = SciFloatField()


class ContinuationStepSerializer(serializers.Serializer):
    m = serializers.IntegerField(read_only=True)
    iterations = serializers.IntegerField(read_only=True)
    damping = SciFloatField()
    update_norm = SciFloatField()
    difference = SciFloatField()


class ConditionReportSerializer(serializers.Serializer):
    R = SciFloatField()
    gamma_R = SciFloatField()
    a1_bound_margin = SciFloatField()
    a1_integrals = serializers.SerializerMethodField()
    a2_threshold = SciFloatField()
    a2_ratio = SciFloatField()
    chi_R = SciFloatField()
    epsilon_max = SciFloatField()
    passed = serializers.BooleanField(read_only=True)
    verdicts = serializers.DictField(child=serializers.BooleanField(), read_only=True)
    margins = serializers.DictField(child=SciFloatField(), read_only=True)
    notes = serializers.ListField(child=serializers.CharField(), read_only=True)
    samples = serializers.IntegerField(read_only=True)

    def get_a1_integrals(self, obj):
        integrals = obj.a1_integrals
        if not integrals:
            return {}
        return {
            'q': format_float(integrals['q']),
            'q_u': {c: format_float(v) for c, v in integrals['q_u'].items()},
        }


class SolveReportSerializer(serializers.Serializer):
    grid_size = serializers.SerializerMethodField()
    epsilon = SciFloatField()
    gamma = SciFloatField()
    residual = SciFloatField()
    converged = serializers.BooleanField(read_only=True)
    violated = serializers.ListField(child=serializers.CharField(), read_only=True)
    steps = ContinuationStepSerializer(many=True, read_only=True)
    checks = serializers.DictField(child=CheckSerializer(), read_only=True)
    conditions = ConditionReportSerializer(read_only=True)

    def get_grid_size(self, obj):
        return int(obj.solution.nodes.size)


class ConstantRowSerializer(serializers.Serializer):
    name = serializers.CharField(read_only=True)
    computed = SciFloatField()
    published = SciFloatField()
    deviation = SciFloatField()
