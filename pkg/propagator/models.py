from django.db import models, transaction

from utils.base import LifecycleModel, TimestampedModel


class SimulationRunCounter(TimestampedModel):
    '''
    Global monotonically increasing counter for SimulationRun IDs.

    Single row (id=1); `get_next_id()` increments and returns the next integer
    inside a DB transaction, used by `SimulationRun.save()` to build "RUN-<n>".
    '''
    last_id = models.IntegerField(default=0)

    @classmethod
    def get_next_id(cls):
        with transaction.atomic():
            counter, created = cls.objects.get_or_create(id=1)
            counter.last_id += 1
            counter.save()
            return counter.last_id


class SimulationRun(LifecycleModel):
    '''
    One invocation of the time propagation.

    Fields:
        run_id (str): human-readable unique ID (e.g., "RUN-7").
        scenario_name (str): name of the scenario file or its 'name' key.
        status (str, choices): running/completed/aborted/failed.
        output_dir (str): directory holding observables.csv, manifest.json and snapshots.
        steps (int): completed time steps.
        final_time (float): last time reached, atomic units.
        error_category (str): category of the domain error that ended the run.
        error_message (str): its message.
        manifest (JSON): the run manifest as written to disk.
        finished_at (datetime): set by `mark_finished`, inherited from LifecycleModel.
    '''
    STATUS_CHOICES = [
        ('running', 'running'),
        ('completed', 'completed'),
        ('aborted', 'aborted'),
        ('failed', 'failed'),
    ]
    run_id = models.CharField(max_length=20, unique=True, editable=False, db_index=True)
    scenario_name = models.CharField(max_length=200)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='running', db_index=True)
    output_dir = models.CharField(max_length=500)
    steps = models.IntegerField(default=0)
    final_time = models.FloatField(null=True, blank=True)
    error_category = models.CharField(max_length=50, null=True, blank=True)
    error_message = models.TextField(null=True, blank=True)
    manifest = models.JSONField(null=True, blank=True)

    def __str__(self):
        return f'{self.run_id} - {self.scenario_name} ({self.status})'

    def save(self, *args, **kwargs):
        if not self.run_id:
            next_id = SimulationRunCounter.get_next_id()
            self.run_id = f'RUN-{next_id}'
        super().save(*args, **kwargs)

    def mark_finished(self, status, final_time=None, steps=None, error=None, manifest=None):
        values = {'status': status}
        if final_time is not None:
            values['final_time'] = final_time
        if steps is not None:
            values['steps'] = steps
        if error is not None:
            values['error_category'] = getattr(error, 'category', 'internal')
            values['error_message'] = str(error)
        if manifest is not None:
            values['manifest'] = manifest
        self.finish(**values)

    class Meta:
        app_label = 'propagator'
        ordering = ['-created_at']
