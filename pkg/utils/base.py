from django.db import models
from django.utils import timezone


class TimestampedModel(models.Model):
    id = models.BigAutoField(primary_key=True)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        abstract = True

    def save(self, *args, **kwargs):
        if 'update_fields' in kwargs and 'updated_at' not in kwargs['update_fields']:
            kwargs['update_fields'] = frozenset(list(kwargs['update_fields']) + ['updated_at'])
        super(TimestampedModel, self).save(*args, **kwargs)

    def save_changes(self, **values):
        '''Set `values` and write only those columns.'''
        for name, value in values.items():
            setattr(self, name, value)
        self.save(update_fields=list(values))


class LifecycleModel(TimestampedModel):
    '''
    A job that starts when its row is created and finishes once.

    Fields:
        finished_at (datetime): when `finish()` ran, None while running.
    '''
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        abstract = True

    @property
    def is_finished(self):
        return self.finished_at is not None

    @property
    def wall_time(self):
        '''Seconds between creation and finish, None while running.'''
        if self.finished_at is None or self.created_at is None:
            return None
        return (self.finished_at - self.created_at).total_seconds()

    def finish(self, **values):
        values.setdefault('finished_at', timezone.now())
        self.save_changes(**values)
